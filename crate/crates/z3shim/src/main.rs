//! Reads an SMT-LIB v2 script from stdin, evaluates it with libz3, and
//! prints the solver output. Behaves like `z3 -in` for the script-per-query
//! protocol used by syminfer: write the whole script, close stdin, read the
//! reply.

use std::ffi::{CStr, CString};
use std::io::Read;

fn main() {
    let mut input = String::new();
    if std::io::stdin().read_to_string(&mut input).is_err() {
        eprintln!("z3shim: stdin is not valid UTF-8");
        std::process::exit(2);
    }
    let script = match CString::new(input) {
        Ok(s) => s,
        Err(_) => {
            eprintln!("z3shim: script contains an interior NUL byte");
            std::process::exit(2);
        }
    };
    unsafe {
        let cfg = z3_sys::Z3_mk_config();
        let ctx = z3_sys::Z3_mk_context(cfg);
        z3_sys::Z3_del_config(cfg);
        let out = z3_sys::Z3_eval_smtlib2_string(ctx, script.as_ptr());
        if !out.is_null() {
            print!("{}", CStr::from_ptr(out).to_string_lossy());
        }
        z3_sys::Z3_del_context(ctx);
    }
}
