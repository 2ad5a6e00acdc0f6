use std::ffi::{CStr, CString};
use std::ptr;

use graphnotice_ffi::*;

unsafe fn last_error() -> String {
    CStr::from_ptr(gn_last_error_message()).to_string_lossy().into_owned()
}

unsafe fn graph(n: usize, edges: &[usize]) -> *mut GnGraph {
    let mut g = ptr::null_mut();
    assert_eq!(gn_graph_new(n, edges.as_ptr(), edges.len() / 2, &mut g), GnStatus::Ok);
    g
}

#[test]
fn graph_roundtrip_and_stats() {
    unsafe {
        let g = graph(4, &[1, 0, 1, 2, 0, 2, 2, 3]);
        assert_eq!(gn_graph_num_nodes(g), 4);
        assert_eq!(gn_graph_num_edges(g), 4);
        let mut edges = [0usize; 8];
        assert_eq!(gn_graph_edges(g, edges.as_mut_ptr(), 8), GnStatus::Ok);
        assert_eq!(edges, [0, 1, 0, 2, 1, 2, 2, 3]);
        assert_eq!(gn_graph_edges(g, edges.as_mut_ptr(), 7), GnStatus::OutOfRange);

        let mut deg = [0.0; 4];
        assert_eq!(gn_graph_degrees(g, deg.as_mut_ptr()), GnStatus::Ok);
        assert_eq!(deg, [2.0, 2.0, 3.0, 1.0]);
        let mut cc = [0.0; 4];
        assert_eq!(gn_graph_clustering(g, cc.as_mut_ptr()), GnStatus::Ok);
        assert_eq!(cc, [1.0, 1.0, 1.0 / 3.0, 0.0]);

        let mut h = [0.0; 4];
        assert_eq!(gn_graph_homophily(g, h.as_mut_ptr()), GnStatus::NotApplicable);
        let x = [1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 1.0];
        assert_eq!(gn_graph_set_features(g, x.as_ptr(), 2), GnStatus::Ok);
        assert_eq!(gn_graph_homophily(g, h.as_mut_ptr()), GnStatus::Ok);
        assert!(h.iter().all(|v| v.is_finite()));
        gn_graph_free(g);
    }
}

#[test]
fn errors_carry_codes_and_messages() {
    unsafe {
        let mut g = ptr::null_mut();
        let self_loop = [1usize, 1];
        assert_eq!(gn_graph_new(3, self_loop.as_ptr(), 1, &mut g), GnStatus::InvalidGraph);
        assert!(g.is_null());
        assert!(!last_error().is_empty());

        assert_eq!(gn_graph_new(3, ptr::null(), 1, &mut g), GnStatus::NullPointer);
        assert!(last_error().contains("edges"));

        let mut a = 0.0;
        let labels = [1u8, 1];
        let scores = [0.2, 0.3];
        assert_eq!(gn_auroc(labels.as_ptr(), scores.as_ptr(), 2, &mut a), GnStatus::Degenerate);

        let g = graph(3, &[0, 1]);
        let name = CString::new("no_such_measure").unwrap();
        let mut r = std::mem::zeroed();
        assert_eq!(gn_measure(name.as_ptr(), g, g, &mut r), GnStatus::Usage);
        // success clears the message
        assert_eq!(gn_graph_num_edges(g), 1);
        let mut deg = [0.0; 3];
        assert_eq!(gn_graph_degrees(g, deg.as_mut_ptr()), GnStatus::Ok);
        assert_eq!(last_error(), "");
        gn_graph_free(g);
        gn_graph_free(ptr::null_mut());
        gn_trace_free(ptr::null_mut());
    }
}

#[test]
fn auroc_and_ks() {
    unsafe {
        let labels = [1u8, 0, 1, 0];
        let scores = [0.9, 0.1, 0.4, 0.4];
        let mut a = 0.0;
        assert_eq!(gn_auroc(labels.as_ptr(), scores.as_ptr(), 4, &mut a), GnStatus::Ok);
        assert_eq!(a, 0.875);

        let x = [1.0, 2.0, 3.0];
        let y = [4.0, 5.0, 6.0];
        let (mut d, mut p) = (0.0, 0.0);
        assert_eq!(gn_ks_two_sample(x.as_ptr(), 3, y.as_ptr(), 3, &mut d, &mut p), GnStatus::Ok);
        assert_eq!(d, 1.0);
        assert!(p > 0.0 && p < 0.1);
    }
}

#[test]
fn attack_trace_and_measure() {
    unsafe {
        let mut edges = Vec::new();
        for i in 0..20usize {
            edges.extend_from_slice(&[i, (i + 1) % 20]);
        }
        let g = graph(20, &edges);
        let mut t = ptr::null_mut();
        assert_eq!(gn_attack_random(g, 5, 3, &mut t), GnStatus::Ok);
        assert_eq!(gn_trace_len(t), 5);
        let (mut u, mut v, mut kind) = (0, 0, GnOpKind::Delete);
        assert_eq!(gn_trace_op(t, 0, &mut u, &mut v, &mut kind), GnStatus::Ok);
        assert!(u < v && kind == GnOpKind::Insert);
        assert_eq!(gn_trace_op(t, 5, &mut u, &mut v, &mut kind), GnStatus::OutOfRange);

        let mut h = ptr::null_mut();
        assert_eq!(gn_trace_apply(g, t, 5, &mut h), GnStatus::Ok);
        assert_eq!(gn_graph_num_edges(h), 25);

        let name = CString::new("degree_ks").unwrap();
        let mut r = std::mem::zeroed::<GnReport>();
        assert_eq!(gn_measure(name.as_ptr(), g, h, &mut r), GnStatus::Ok);
        assert_eq!(r.has_statistic, 1);
        assert!(r.statistic > 0.0 && r.p_value <= 1.0);
        assert!(r.noticeable == 0 || r.noticeable == 1);

        let scorer = CString::new("degree").unwrap();
        assert_eq!(gn_hidenseek(scorer.as_ptr(), g, h, 0, 1, &mut r), GnStatus::Ok);
        assert_eq!(r.has_statistic, 1);
        assert!((0.0..=1.0).contains(&r.statistic));
        assert_eq!(r.threshold, 0.6);
        assert_eq!(r.noticeable, (r.statistic >= 0.6) as i32);

        let mut dice = ptr::null_mut();
        assert_eq!(gn_attack_dice(g, 2, 0, &mut dice), GnStatus::NotApplicable);
        let labels: Vec<usize> = (0..20).map(|i| i / 10).collect();
        assert_eq!(gn_graph_set_labels(g, labels.as_ptr()), GnStatus::Ok);
        assert_eq!(gn_attack_dice(g, 2, 0, &mut dice), GnStatus::Ok);
        assert_eq!(gn_trace_len(dice), 2);

        let mut st = ptr::null_mut();
        assert_eq!(gn_attack_structack(g, 3, &mut st), GnStatus::Ok);
        assert_eq!(gn_trace_len(st), 3);

        for t in [t, dice, st] {
            gn_trace_free(t);
        }
        gn_graph_free(h);
        gn_graph_free(g);
    }
}

#[test]
fn header_declares_every_export() {
    let header = include_str!("../include/graphnotice.h");
    for sym in [
        "gn_last_error_message",
        "gn_graph_new",
        "gn_graph_load_dir",
        "gn_graph_free",
        "gn_auroc",
        "gn_ks_two_sample",
        "gn_measure",
        "gn_hidenseek",
        "gn_attack_structack",
        "gn_trace_apply",
        "GN_STATUS_OK",
        "typedef struct GnGraph GnGraph",
    ] {
        assert!(header.contains(sym), "{sym} missing from header");
    }
}

#[test]
fn header_compiles_as_c() {
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/include");
    let src = std::env::temp_dir().join(format!("gn_header_{}.c", std::process::id()));
    std::fs::write(
        &src,
        "#include \"graphnotice.h\"\nint main(void) { GnGraph *g = 0; return gn_graph_num_edges(g) == 0 ? GN_STATUS_OK : 1; }\n",
    )
    .unwrap();
    let status = match std::process::Command::new(&cc)
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I", dir])
        .arg(&src)
        .status()
    {
        Ok(s) => s,
        Err(_) => {
            eprintln!("no C compiler; skipping");
            return;
        }
    };
    let _ = std::fs::remove_file(&src);
    assert!(status.success());
}
