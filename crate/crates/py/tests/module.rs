use pyo3::prelude::*;
use pyo3::types::PyDict;
use revrec::revrec;

fn run(code: &str) {
    pyo3::append_to_inittab!(revrec);
    Python::initialize();
    Python::attach(|py| {
        let globals = PyDict::new(py);
        let code = std::ffi::CString::new(code).unwrap();
        if let Err(e) = py.run(&code, Some(&globals), None) {
            e.print(py);
            panic!("python snippet failed");
        }
    });
}

#[test]
fn module_functions() {
    run(r#"
import revrec
assert revrec.clean_for_embedding("Crash!!  on Startup") == "crash on startup"
assert revrec.clean_for_analysis("The app keeps crashing") == ["app", "keep", "crash"]
assert revrec.overlap_rate(["a", "b"], ["b", "c"]) == 0.5
ranks = [1] * 21 + [2] * 11 + [3] * 6 + [None] * 43
assert round(100 * revrec.acc_at_n(ranks, 3), 2) == 46.91
assert round(100 * revrec.mrr_at_n(ranks, 2), 2) == 32.72
v = revrec.hash_embed("video freezes on startup")
assert len(v) == 256
assert abs(revrec.cosine(v, v) - 1.0) < 1e-6
try:
    revrec.hash_embed("404 ???")
except ValueError:
    pass
else:
    raise AssertionError("empty text embedded")
"#);
}
