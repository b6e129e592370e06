use std::ffi::{CStr, CString};
use std::path::Path;
use std::ptr;

use p2pgnn::graph::{write_dataset, Dataset, Graph, NodeData, NodeSet, Splits};
use p2pgnn_ffi::*;

/// Two 4-cliques joined by one edge, one labeled node per class.
fn fixture(dir: &Path) -> [CString; 3] {
    let mut edges = Vec::new();
    for block in [0usize, 4] {
        for i in 0..4 {
            for j in i + 1..4 {
                edges.push((block + i, block + j));
            }
        }
    }
    edges.push((3, 4));
    let graph = Graph::from_edges(8, edges).unwrap();
    let labels: Vec<Option<usize>> = (0..8).map(|u| Some(u / 4)).collect();
    let features: Vec<f64> = (0..8).flat_map(|u| [u as f64, 1.0]).collect();
    let data = NodeData::new(2, 2, features, labels).unwrap();
    let set = |ids: &[usize]| ids.iter().copied().collect::<NodeSet>();
    let splits = Splits {
        train: set(&[0, 7]),
        valid: set(&[1]),
        test: set(&[2, 3, 4, 5, 6]),
    };
    let ds = Dataset::new(graph, data, splits).unwrap();
    let paths = ["nodes.tsv", "edges.tsv", "splits.tsv"].map(|f| dir.join(f));
    write_dataset(&ds, &paths[0], &paths[1], &paths[2]).unwrap();
    paths.map(|p| CString::new(p.to_str().unwrap()).unwrap())
}

fn load(dir: &Path) -> *mut P2pgnnDataset {
    let [n, e, s] = fixture(dir);
    let mut ds = ptr::null_mut();
    let rc = unsafe { p2pgnn_dataset_load(n.as_ptr(), e.as_ptr(), s.as_ptr(), &mut ds) };
    assert_eq!(rc, P2PGNN_OK);
    assert!(!ds.is_null());
    ds
}

fn last_error() -> String {
    let p = p2pgnn_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn dataset_dimensions() {
    let dir = tempfile::tempdir().unwrap();
    let ds = load(dir.path());
    unsafe {
        assert_eq!(p2pgnn_dataset_num_nodes(ds), 8);
        assert_eq!(p2pgnn_dataset_num_classes(ds), 2);
        assert_eq!(p2pgnn_dataset_num_features(ds), 2);
        p2pgnn_dataset_free(ds);
        assert_eq!(p2pgnn_dataset_num_nodes(ptr::null()), 0);
        p2pgnn_dataset_free(ptr::null_mut());
    }
}

#[test]
fn missing_file_reports_io() {
    let missing = CString::new("/nonexistent/nodes.tsv").unwrap();
    let mut ds = ptr::null_mut();
    let rc = unsafe { p2pgnn_dataset_load(missing.as_ptr(), missing.as_ptr(), missing.as_ptr(), &mut ds) };
    assert_eq!(rc, P2PGNN_IO);
    assert!(ds.is_null());
    assert!(last_error().contains("nonexistent"));
}

#[test]
fn null_arguments_rejected() {
    let mut ds = ptr::null_mut();
    let rc = unsafe { p2pgnn_dataset_load(ptr::null(), ptr::null(), ptr::null(), &mut ds) };
    assert_eq!(rc, P2PGNN_NULL_POINTER);
    assert!(last_error().contains("null"));
    let mut acc = 0.0;
    assert_eq!(unsafe { p2pgnn_simulation_test_accuracy(ptr::null(), &mut acc) }, P2PGNN_NULL_POINTER);
    assert_eq!(unsafe { p2pgnn_simulation_step(ptr::null_mut(), 1) }, P2PGNN_NULL_POINTER);
}

#[test]
fn success_clears_last_error() {
    assert_eq!(unsafe { p2pgnn_simulation_step(ptr::null_mut(), 1) }, P2PGNN_NULL_POINTER);
    assert!(!p2pgnn_last_error_message().is_null());
    let len = p2pgnn_message_len(1);
    let mut buf = vec![0u8; len];
    let rc = unsafe { p2pgnn_message_encode(0, [1.0].as_ptr(), [2.0].as_ptr(), 1, buf.as_mut_ptr(), len) };
    assert_eq!(rc, P2PGNN_OK);
    assert!(p2pgnn_last_error_message().is_null());
}

#[test]
fn simulation_converges_to_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let ds = load(dir.path());
    let len = 16;
    let mut base = vec![0.0; len];
    unsafe {
        assert_eq!(p2pgnn_dataset_known_labels(ds, base.as_mut_ptr(), len), P2PGNN_OK);
        assert_eq!(&base[..4], &[1.0, 0.0, 1.0, 0.0]);

        let mut oracle = vec![0.0; len];
        let mut oracle_acc = 0.0;
        let rc = p2pgnn_oracle_fdiff(ds, base.as_ptr(), oracle.as_mut_ptr(), len, 0.9, 1.0, &mut oracle_acc);
        assert_eq!(rc, P2PGNN_OK);
        assert_eq!(oracle_acc, 1.0);

        let mut sim = ptr::null_mut();
        let rc = p2pgnn_simulation_new(ds, base.as_ptr(), len, 0.9, 1.0, 0.5, 7, &mut sim);
        assert_eq!(rc, P2PGNN_OK);
        // the dataset handle may go away; the simulation keeps its own copy
        p2pgnn_dataset_free(ds);

        assert_eq!(p2pgnn_simulation_step(sim, 3000), P2PGNN_OK);
        assert_eq!(p2pgnn_simulation_time(sim), 3000);
        assert!(p2pgnn_simulation_bytes(sim) > 0);
        assert_eq!(p2pgnn_simulation_bytes(sim) % p2pgnn_message_len(2) as u64, 0);

        let mut pred = vec![0.0; len];
        assert_eq!(p2pgnn_simulation_predictions(sim, pred.as_mut_ptr(), len), P2PGNN_OK);
        let dist = pred.iter().zip(&oracle).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(dist < 1e-6, "distance to oracle {dist}");

        let mut acc = 0.0;
        assert_eq!(p2pgnn_simulation_test_accuracy(sim, &mut acc), P2PGNN_OK);
        assert_eq!(acc, 1.0);

        let mut short = vec![0.0; 3];
        assert_eq!(p2pgnn_simulation_predictions(sim, short.as_mut_ptr(), 3), P2PGNN_INVALID_ARGUMENT);
        p2pgnn_simulation_free(sim);
    }
}

#[test]
fn bad_parameters_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let ds = load(dir.path());
    let base = [0.5; 16];
    let mut out = vec![0.0; 16];
    unsafe {
        let rc = p2pgnn_oracle_fdiff(ds, base.as_ptr(), out.as_mut_ptr(), 16, 1.5, 1.0, ptr::null_mut());
        assert_eq!(rc, P2PGNN_INVALID_ARGUMENT);
        assert!(last_error().contains("beta"));
        let rc = p2pgnn_oracle_fdiff(ds, base.as_ptr(), out.as_mut_ptr(), 10, 0.9, 1.0, ptr::null_mut());
        assert_eq!(rc, P2PGNN_INVALID_ARGUMENT);
        let mut sim = ptr::null_mut();
        let rc = p2pgnn_simulation_new(ds, base.as_ptr(), 16, 0.9, 1.0, 2.0, 0, &mut sim);
        assert_ne!(rc, P2PGNN_OK);
        assert!(sim.is_null());
        p2pgnn_dataset_free(ds);
    }
}

#[test]
fn message_round_trip() {
    let pred = [0.25, 0.5, 0.125];
    let err = [-1.0, 0.0, 3.5];
    let len = p2pgnn_message_len(3);
    assert_eq!(len, 54);
    assert_eq!(p2pgnn_message_len(7), 118);
    let mut buf = vec![0u8; len];
    unsafe {
        let rc = p2pgnn_message_encode(42, pred.as_ptr(), err.as_ptr(), 3, buf.as_mut_ptr(), len);
        assert_eq!(rc, P2PGNN_OK);
        assert_eq!(&buf[..4], &42u32.to_le_bytes());

        let (mut sender, mut p, mut e) = (0u32, [0.0; 3], [0.0; 3]);
        let rc = p2pgnn_message_decode(buf.as_ptr(), len, 3, &mut sender, p.as_mut_ptr(), e.as_mut_ptr());
        assert_eq!(rc, P2PGNN_OK);
        assert_eq!((sender, p, e), (42, pred, err));

        let rc = p2pgnn_message_decode(buf.as_ptr(), len - 1, 3, &mut sender, p.as_mut_ptr(), e.as_mut_ptr());
        assert_eq!(rc, P2PGNN_CODEC);
        let rc = p2pgnn_message_decode(buf.as_ptr(), len, 2, &mut sender, p.as_mut_ptr(), e.as_mut_ptr());
        assert_eq!(rc, P2PGNN_CODEC);
        let rc = p2pgnn_message_encode(1, pred.as_ptr(), err.as_ptr(), 3, buf.as_mut_ptr(), len + 1);
        assert_eq!(rc, P2PGNN_INVALID_ARGUMENT);
    }
}

#[test]
fn header_matches_exports() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/p2pgnn.h")).unwrap();
    for name in [
        "p2pgnn_dataset_load",
        "p2pgnn_oracle_fdiff",
        "p2pgnn_simulation_new",
        "p2pgnn_message_decode",
        "p2pgnn_last_error_message",
        "typedef struct P2pgnnDataset P2pgnnDataset;",
        "#define P2PGNN_PANIC 9",
    ] {
        assert!(header.contains(name), "header lacks {name}");
    }
}
