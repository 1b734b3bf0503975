mod common;

use std::fs::{self, OpenOptions};
use std::sync::Arc;
use std::thread;

use gmdl_core::interchange::export_json;
use gmdl_core::store::{Store, StoreOptions, LOG_FILE};
use tempfile::TempDir;

fn fast() -> StoreOptions {
    StoreOptions { sync: false }
}

/// Commits random batches until roughly `objects` objects exist.
fn populate(store: &Store, seed: u64, objects: usize) -> usize {
    let mut rng = common::rng(seed);
    let mut accepted = 0;
    while store.view().len() < objects {
        let batch = common::random_batch(&mut rng, &store.view());
        if store.commit(&batch).is_ok() {
            accepted += 1;
        }
    }
    accepted
}

#[test]
fn snapshot_and_log_replay_agree() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().join("s");
    let store = Store::init_with(&dir, fast()).unwrap();
    let accepted = populate(&store, 1, 1000);
    let live = store.view();
    drop(store);

    let replayed = Store::open_with(&dir, fast()).unwrap();
    assert_eq!(replayed.open_report().replayed_batches, accepted);
    assert_eq!(*replayed.view(), *live);
    replayed.snapshot().unwrap();
    assert_eq!(fs::metadata(dir.join(LOG_FILE)).unwrap().len(), 0);
    drop(replayed);

    let from_snapshot = Store::open_with(&dir, fast()).unwrap();
    assert_eq!(from_snapshot.open_report().replayed_batches, 0);
    assert_eq!(*from_snapshot.view(), *live);
    assert_eq!(export_json(&from_snapshot.view()), export_json(&live));
    assert!(from_snapshot.view().validate().ok);
}

#[test]
fn truncation_anywhere_in_last_record_loses_only_that_batch() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().join("s");
    let store = Store::init_with(&dir, fast()).unwrap();
    populate(&store, 2, 60);
    let before_last = store.view();
    let log = dir.join(LOG_FILE);
    let len_before = fs::metadata(&log).unwrap().len();
    let mut rng = common::rng(3);
    loop {
        if store.commit(&common::random_batch(&mut rng, &store.view())).is_ok() {
            break;
        }
    }
    let full = store.view();
    drop(store);
    let bytes = fs::read(&log).unwrap();

    for cut in len_before..bytes.len() as u64 {
        fs::write(&log, &bytes[..cut as usize]).unwrap();
        let s = Store::open_with(&dir, fast()).unwrap();
        assert_eq!(*s.view(), *before_last, "cut at {cut}");
        assert!(s.view().validate().ok);
        assert_eq!(s.open_report().discarded_bytes, cut - len_before);
    }
    fs::write(&log, &bytes).unwrap();
    assert_eq!(*Store::open_with(&dir, fast()).unwrap().view(), *full);
}

#[test]
fn commits_after_recovery_overwrite_the_torn_tail() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().join("s");
    let store = Store::init_with(&dir, fast()).unwrap();
    populate(&store, 4, 30);
    drop(store);
    let log = dir.join(LOG_FILE);
    let f = OpenOptions::new().append(true).open(&log).unwrap();
    use std::io::Write;
    (&f).write_all(b"{\"rev\":999,\"ops\":[{\"op\":\"put_ent").unwrap();
    drop(f);

    let s = Store::open_with(&dir, fast()).unwrap();
    assert!(s.open_report().discarded_bytes > 0);
    populate(&s, 5, 40);
    let expected = s.view();
    drop(s);
    let reopened = Store::open_with(&dir, fast()).unwrap();
    assert_eq!(reopened.open_report().discarded_bytes, 0);
    assert_eq!(*reopened.view(), *expected);
}

#[test]
fn readers_always_see_committed_valid_states() {
    let tmp = TempDir::new().unwrap();
    let store = Arc::new(Store::init_with(tmp.path().join("s"), fast()).unwrap());
    let reader = {
        let store = Arc::clone(&store);
        thread::spawn(move || {
            let mut last = 0;
            for _ in 0..200 {
                let view = store.view();
                assert!(view.revision() >= last);
                last = view.revision();
                assert!(view.validate().ok);
            }
        })
    };
    populate(&store, 6, 150);
    reader.join().unwrap();
}
