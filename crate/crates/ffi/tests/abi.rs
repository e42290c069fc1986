use std::ffi::{CStr, CString};
use std::ptr;

use ctxrank::{remark5_instance, Instance};
use ctxrank_ffi::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn last_error() -> String {
    let p = ctxrank_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

unsafe fn take(p: *mut std::ffi::c_char) -> String {
    let s = CStr::from_ptr(p).to_string_lossy().into_owned();
    ctxrank_string_free(p);
    s
}

fn session(policy: &str, k: usize, q: usize, m: &[usize]) -> *mut CtxSession {
    let name = CString::new(policy).unwrap();
    let mut s = ptr::null_mut();
    let st = unsafe {
        ctxrank_session_new(
            k,
            q,
            m.as_ptr(),
            name.as_ptr(),
            ptr::null(),
            true,
            2,
            ptr::null(),
            &mut s,
        )
    };
    assert_eq!(st, CtxStatus::Ok, "{}", last_error());
    s
}

#[test]
fn session_picks_the_best_designs() {
    let inst: Instance = remark5_instance();
    let (k, q) = (inst.k, inst.q);
    let var: Vec<f64> = (0..k * q)
        .map(|c| inst.stds[(c / q, c % q)].powi(2))
        .collect();
    let name = CString::new("aoamc").unwrap();
    let mut s = ptr::null_mut();
    let st = unsafe {
        ctxrank_session_new(
            k,
            q,
            inst.m.as_ptr(),
            name.as_ptr(),
            var.as_ptr(),
            true,
            2,
            ptr::null(),
            &mut s,
        )
    };
    assert_eq!(st, CtxStatus::Ok);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut draw =
        |i: usize, l: usize| inst.means[(i, l)] + inst.stds[(i, l)] * rng.random_range(-1.7..1.7);
    unsafe {
        for i in 0..k {
            for l in 0..q {
                for _ in 0..5 {
                    assert_eq!(ctxrank_session_observe(s, i, l, draw(i, l)), CtxStatus::Ok);
                }
            }
        }
        for _ in 0..3000 {
            let (mut d, mut c) = (0, 0);
            assert_eq!(ctxrank_session_next(s, &mut d, &mut c), CtxStatus::Ok);
            assert!(d < k && c < q);
            assert_eq!(ctxrank_session_observe(s, d, c, draw(d, c)), CtxStatus::Ok);
        }
        let mut total = 0;
        for i in 0..k {
            for l in 0..q {
                let mut n = 0;
                assert_eq!(ctxrank_session_count(s, i, l, &mut n), CtxStatus::Ok);
                total += n;
            }
        }
        assert_eq!(total, (5 * k * q + 3000) as u64);
        for l in 0..q {
            let mut sel = vec![usize::MAX; inst.m[l]];
            assert_eq!(
                ctxrank_session_select(s, l, sel.as_mut_ptr(), sel.len()),
                CtxStatus::Ok
            );
            let mut want = inst.true_top_m(l).unwrap();
            want.sort();
            sel.sort();
            assert_eq!(sel, want);
        }
        ctxrank_session_free(s);
    }
}

#[test]
fn session_errors_are_reported() {
    let s = session("aoamc", 3, 1, &[1]);
    unsafe {
        let (mut d, mut c) = (0, 0);
        // nothing observed yet
        assert_eq!(ctxrank_session_next(s, &mut d, &mut c), CtxStatus::Numeric);
        assert!(last_error().contains("undefined"));
        assert_eq!(
            ctxrank_session_observe(s, 3, 0, 1.0),
            CtxStatus::InvalidArgument
        );
        assert_eq!(
            ctxrank_session_observe(s, 0, 0, f64::NAN),
            CtxStatus::Numeric
        );
        assert_eq!(
            ctxrank_session_next(s, ptr::null_mut(), &mut c),
            CtxStatus::NullPointer
        );
        let mut one = [0usize; 0];
        assert_eq!(
            ctxrank_session_select(s, 0, one.as_mut_ptr(), 0),
            CtxStatus::InvalidArgument
        );
        ctxrank_session_free(s);
        ctxrank_session_free(ptr::null_mut());
    }

    let bad = CString::new("nope").unwrap();
    let mut s = ptr::null_mut();
    let st = unsafe {
        ctxrank_session_new(
            3,
            1,
            [1usize].as_ptr(),
            bad.as_ptr(),
            ptr::null(),
            true,
            2,
            ptr::null(),
            &mut s,
        )
    };
    assert_ne!(st, CtxStatus::Ok);
    assert!(s.is_null());
    let ok = CString::new("ea").unwrap();
    let st = unsafe {
        ctxrank_session_new(
            3,
            1,
            [3usize].as_ptr(),
            ok.as_ptr(),
            ptr::null(),
            true,
            2,
            ptr::null(),
            &mut s,
        )
    };
    assert_eq!(st, CtxStatus::InvalidArgument);
}

#[test]
fn solve_ratios_round_trip() {
    let json = CString::new(serde_json::to_string(&remark5_instance()).unwrap()).unwrap();
    let mut out = ptr::null_mut();
    let st = unsafe { ctxrank_solve_ratios(json.as_ptr(), &mut out) };
    assert_eq!(st, CtxStatus::Ok);
    let v: serde_json::Value = serde_json::from_str(&unsafe { take(out) }).unwrap();
    let i = v["optimal_index"].as_u64().unwrap() as usize;
    let z = v["solutions"][i]["z"].as_f64().unwrap();
    assert!((z - 0.07163).abs() < 5e-5, "{z}");

    let junk = CString::new("{").unwrap();
    let mut out = ptr::null_mut();
    assert_eq!(
        unsafe { ctxrank_solve_ratios(junk.as_ptr(), &mut out) },
        CtxStatus::Config
    );
    assert!(out.is_null());
    assert_eq!(
        unsafe { ctxrank_solve_ratios(ptr::null(), &mut out) },
        CtxStatus::NullPointer
    );
}

#[test]
fn run_experiment_returns_report() {
    let cfg = serde_json::json!({
        "policies": [{"id": "ea"}, {"id": "aoamc"}],
        "source": {"kind": "remark5"},
        "budget": 200,
        "macros": 20,
        "seed": 1
    });
    let c = CString::new(cfg.to_string()).unwrap();
    let mut out = ptr::null_mut();
    let st = unsafe { ctxrank_run_experiment(c.as_ptr(), 1, &mut out) };
    assert_eq!(st, CtxStatus::Ok, "{}", last_error());
    let v: serde_json::Value = serde_json::from_str(&unsafe { take(out) }).unwrap();
    assert_eq!(v["policies"].as_array().unwrap().len(), 2);

    let bad = CString::new(cfg.to_string().replace("200", "10")).unwrap();
    let mut out = ptr::null_mut();
    assert_eq!(
        unsafe { ctxrank_run_experiment(bad.as_ptr(), 1, &mut out) },
        CtxStatus::Config
    );
}

#[test]
fn version_is_nonempty() {
    let v = unsafe { CStr::from_ptr(ctxrank_version()) };
    assert!(!v.to_bytes().is_empty());
}
