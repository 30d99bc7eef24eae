use std::ffi::{CStr, CString};
use std::ptr;

use prefattach_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(pa_last_error()) }
        .to_string_lossy()
        .into_owned()
}

fn graph(c: u32, delta: f64, seed: u64) -> *mut PaGraph {
    let mut g = ptr::null_mut();
    assert_eq!(
        unsafe { pa_graph_new(c, delta, seed, &mut g) },
        PaStatus::Ok
    );
    assert!(!g.is_null());
    g
}

#[test]
fn grow_track_and_compare() {
    unsafe {
        let g = graph(2, -0.5, 11);
        assert_eq!(pa_graph_grow(g, 20, ptr::null(), 0), PaStatus::Ok);
        let mut a = ptr::null_mut();
        let mut b = ptr::null_mut();
        assert_eq!(pa_tracker_new(g, 2, 3, &mut a), PaStatus::Ok);
        assert_eq!(pa_tracker_new(g, 10, 20, &mut b), PaStatus::Ok);
        let list = [a, b];
        assert_eq!(pa_graph_grow(g, 5_000, list.as_ptr(), 2), PaStatus::Ok);

        let mut n = 0usize;
        assert_eq!(pa_graph_n(g, &mut n), PaStatus::Ok);
        assert_eq!(n, 5_000);
        for (t, (i, j)) in [(a, (2, 3)), (b, (10, 20))] {
            let (mut tracked, mut truth, mut seen) = (0u64, 0u64, 0u64);
            assert_eq!(pa_tracker_common_friends(t, &mut tracked), PaStatus::Ok);
            assert_eq!(pa_graph_common_friends(g, i, j, &mut truth), PaStatus::Ok);
            assert_eq!(pa_tracker_n(t, &mut seen), PaStatus::Ok);
            assert_eq!(tracked, truth);
            assert_eq!(seen, 5_000);
            let (mut di, mut dj, mut y, mut s) = (0u32, 0u32, 0.0, -1.0);
            assert_eq!(pa_graph_degree(g, i, &mut di), PaStatus::Ok);
            assert_eq!(pa_graph_degree(g, j, &mut dj), PaStatus::Ok);
            assert_eq!(pa_tracker_degree_product(t, &mut y), PaStatus::Ok);
            assert_eq!(y, (f64::from(di) - 0.5) * (f64::from(dj) - 0.5));
            assert_eq!(pa_tracker_scaled(t, &mut s), PaStatus::Ok);
            assert!(s >= 0.0);
        }

        // a tracker left behind cannot be driven again
        let mut stale = ptr::null_mut();
        assert_eq!(pa_tracker_new(g, 4, 5, &mut stale), PaStatus::Ok);
        assert_eq!(pa_graph_grow(g, 6_000, list.as_ptr(), 2), PaStatus::Ok);
        let one = [stale];
        assert_eq!(
            pa_graph_grow(g, 7_000, one.as_ptr(), 1),
            PaStatus::InvalidArgument
        );
        assert!(last_error().contains("tracker is at n = 5000"));

        pa_tracker_free(a);
        pa_tracker_free(b);
        pa_tracker_free(stale);
        pa_graph_free(g);
    }
}

#[test]
fn save_and_load_resume_identically() {
    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("g.snap").to_str().unwrap()).unwrap();
    unsafe {
        let g = graph(3, 1.0, 5);
        assert_eq!(pa_graph_grow(g, 400, ptr::null(), 0), PaStatus::Ok);
        assert_eq!(pa_graph_save(g, path.as_ptr()), PaStatus::Ok);
        let mut h = ptr::null_mut();
        assert_eq!(pa_graph_load(path.as_ptr(), &mut h), PaStatus::Ok);
        assert_eq!(pa_graph_grow(g, 900, ptr::null(), 0), PaStatus::Ok);
        assert_eq!(pa_graph_grow(h, 900, ptr::null(), 0), PaStatus::Ok);
        for i in 1..=900 {
            let (mut a, mut b) = (0u32, 0u32);
            pa_graph_degree(g, i, &mut a);
            pa_graph_degree(h, i, &mut b);
            assert_eq!(a, b, "node {i}");
        }
        pa_graph_free(g);
        pa_graph_free(h);

        let missing = CString::new(dir.path().join("none").to_str().unwrap()).unwrap();
        let mut z = ptr::null_mut();
        assert_eq!(pa_graph_load(missing.as_ptr(), &mut z), PaStatus::Io);
        assert!(z.is_null());
    }
}

#[test]
fn theory_values() {
    unsafe {
        let mut k = std::mem::zeroed::<PaConstants>();
        assert_eq!(pa_constants(2, 0.0, &mut k), PaStatus::Ok);
        assert_eq!(k.gamma, 0.5);
        assert_eq!(k.regime, PaRegime::Logarithmic);
        assert_eq!(k.pair_rate, 0.125);
        assert_eq!(pa_constants(2, -1.5, &mut k), PaStatus::Ok);
        assert_eq!(k.regime, PaRegime::Power);

        let mut v = 0.0;
        assert_eq!(pa_c_ij(2, 0.0, 2, 3, &mut v), PaStatus::Ok);
        assert!((v - 1.737_414_919_044_297_7).abs() < 1e-12);
        assert_eq!(
            pa_expected_shifted_degree(2, 0.0, 2, 1000, &mut v),
            PaStatus::Ok
        );
        assert!((v - 47.570_696_388_944_86).abs() < 1e-10);
        assert_eq!(
            pa_expected_degree_product(2, 0.0, 2, 3, 3, &mut v),
            PaStatus::Ok
        );
        assert_eq!(v, 5.0);
        assert_eq!(pa_estimate(2, 1.5, 7, 4.0, &mut v), PaStatus::Ok);
        assert_eq!(v, 7.0);
        assert_eq!(pa_estimate(2, -1.5, 3, 4.0, &mut v), PaStatus::Ok);
        assert!((v - 3.0 * 4f64.powf(0.6)).abs() < 1e-12);
        assert_eq!(pa_subsample_time(1001, 2.0), 500);
    }
}

#[test]
fn errors_are_reported() {
    unsafe {
        let mut g = ptr::null_mut();
        assert_eq!(pa_graph_new(2, -2.0, 0, &mut g), PaStatus::ParameterDomain);
        assert!(g.is_null());
        assert!(!last_error().is_empty());
        assert_eq!(
            pa_graph_new(2, 0.0, 0, ptr::null_mut()),
            PaStatus::NullPointer
        );
        assert!(last_error().contains("null pointer"));

        let g = graph(2, 0.0, 0);
        let mut n = 0usize;
        assert_eq!(pa_graph_n(ptr::null(), &mut n), PaStatus::NullPointer);
        let mut d = 0u32;
        assert_eq!(pa_graph_degree(g, 0, &mut d), PaStatus::InvalidArgument);
        assert_eq!(pa_graph_degree(g, 2, &mut d), PaStatus::InvalidArgument);
        let mut t = ptr::null_mut();
        assert_eq!(pa_tracker_new(g, 1, 5, &mut t), PaStatus::InvalidArgument);
        assert_eq!(pa_graph_grow(g, 10, ptr::null(), 3), PaStatus::NullPointer);
        let mut v = 0.0;
        assert_eq!(
            pa_estimate(2, 0.0, 1, 1.0, &mut v),
            PaStatus::InvalidArgument
        );
        assert_eq!(pa_c_ij(2, 0.0, 3, 3, &mut v), PaStatus::ParameterDomain);
        pa_graph_free(g);
        pa_graph_free(ptr::null_mut());
        pa_tracker_free(ptr::null_mut());

        let version = CStr::from_ptr(pa_version()).to_str().unwrap();
        assert_eq!(version, env!("CARGO_PKG_VERSION"));
    }
}
