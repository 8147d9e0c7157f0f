use std::ffi::{c_char, CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use cellprobe_ffi::*;

fn last_error() -> String {
    let p = cp_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn session_dump(s: *const CpSession) -> String {
    let mut len = 0usize;
    unsafe {
        assert_eq!(cp_session_trace_dump(s, ptr::null_mut(), 0, &mut len), CpStatus::BufferTooSmall);
        let mut buf = vec![0u8; len + 1];
        assert_eq!(cp_session_trace_dump(s, buf.as_mut_ptr().cast(), buf.len(), &mut len), CpStatus::Ok);
        buf.truncate(len);
        String::from_utf8(buf).unwrap()
    }
}

#[test]
fn machine_round_trip() {
    unsafe {
        let mut m = ptr::null_mut();
        assert_eq!(cp_machine_new(8, 16, 0, 1, &mut m), CpStatus::Ok);
        let label = CString::new("op").unwrap();
        assert_eq!(cp_machine_begin(m, label.as_ptr()), CpStatus::Ok);
        assert_eq!(cp_machine_write(m, 3, 77), CpStatus::Ok);
        let mut w = 0;
        assert_eq!(cp_machine_read(m, 3, &mut w), CpStatus::Ok);
        assert_eq!(w, 77);
        assert_eq!(cp_machine_end(m), CpStatus::Ok);
        assert_eq!(cp_machine_operation_count(m), 1);
        let mut buf = [0 as c_char; 128];
        let mut len = 0;
        assert_eq!(cp_machine_trace_dump(m, buf.as_mut_ptr(), buf.len(), &mut len), CpStatus::Ok);
        let dump = CStr::from_ptr(buf.as_ptr()).to_str().unwrap();
        assert_eq!(dump, "op_index,op_label,address,kind\n0,op,3,W\n0,op,3,R\n\n");
        assert_eq!(len, dump.len());
        cp_machine_free(m);
    }
}

#[test]
fn errors_carry_codes_and_messages() {
    unsafe {
        let mut m = ptr::null_mut();
        assert_eq!(cp_machine_new(0, 16, 0, 1, &mut m), CpStatus::Machine);
        assert!(last_error().contains("at least 1"));
        assert_eq!(cp_machine_new(4, 16, 0, 1, ptr::null_mut()), CpStatus::NullPointer);
        assert_eq!(cp_machine_new(4, 16, 0, 1, &mut m), CpStatus::Ok);
        assert_eq!(cp_machine_write(m, 0, 1), CpStatus::Machine);
        assert!(last_error().contains("outside an operation"));
        assert_eq!(cp_machine_end(ptr::null_mut()), CpStatus::NullPointer);
        assert_eq!(cp_machine_operation_count(ptr::null()), 0);
        cp_machine_free(m);
        cp_machine_free(ptr::null_mut());
        let mut d = 0;
        assert_eq!(cp_hamming(1 << 5, 0, 4, &mut d), CpStatus::InvalidArgument);
        let (mut e, mut b) = (0.0, 0.0);
        assert_eq!(cp_resolution_probability(10, 3, 2, &mut e, &mut b), CpStatus::Analysis);
    }
}

#[test]
fn session_answers_and_stays_oblivious() {
    let run = |values: &[u64], queries: &[u64]| unsafe {
        let mut s = ptr::null_mut();
        assert_eq!(cp_session_new(8, 1, 2.0, 16, 16, &mut s), CpStatus::Ok);
        for &v in values {
            assert_eq!(cp_session_insert(s, v), CpStatus::Ok);
        }
        let mut answers = Vec::new();
        for &q in queries {
            let (mut found, mut p) = (false, 0u64);
            assert_eq!(cp_session_query(s, q, &mut found, &mut p), CpStatus::Ok);
            answers.push(found.then_some(p));
        }
        let dump = session_dump(s);
        assert!(cp_session_total_probes(s) > 0);
        cp_session_free(s);
        (answers, dump)
    };
    let (a1, d1) = run(&[0b1010_0000, 0b0000_1111, 3], &[0b1010_0001, 0b1111_1111]);
    assert_eq!(a1, vec![Some(0b1010_0000), None]);
    let (_, d2) = run(&[200, 1, 9], &[7, 100]);
    assert_eq!(d1, d2);
}

#[test]
fn session_rejects_bad_setup() {
    unsafe {
        let mut s = ptr::null_mut();
        assert_eq!(cp_session_new(16, 1, 2.0, 8, 16, &mut s), CpStatus::Ok);
        assert_eq!(cp_session_insert(s, 5), CpStatus::Structure);
        assert!(last_error().contains("16 + 1"));
        cp_session_free(s);
        assert_eq!(cp_session_new(8, 1, 0.5, 8, 16, &mut s), CpStatus::InvalidArgument);
    }
}

#[test]
fn pure_functions() {
    unsafe {
        let mut d = 0;
        assert_eq!(cp_hamming(0b1011, 0b0001, 4, &mut d), CpStatus::Ok);
        assert_eq!(d, 2);
        let (mut e, mut b) = (0.0, 0.0);
        assert_eq!(cp_resolution_probability(100, 10, 1, &mut e, &mut b), CpStatus::Ok);
        assert!((e - 1.0 / 110.0).abs() < 1e-14);
        assert!((b - 0.0064).abs() < 1e-15);
        let p = CpEncodingParams { n_i: 64, d_prime: 9, word_bits: 0, client_bits: 0, sample_cells: 0, newer_cells: 0, f: 64, gamma_size: 0 };
        let mut out = CpEncodingLengths::default();
        assert_eq!(cp_encoding_lengths(&p, CpBranch::Weak, &mut out), CpStatus::Ok);
        assert_eq!((out.case0_bits, out.case1_bits, out.entropy_floor), (577.0, 449.0, 576.0));
        let bad = CpEncodingParams { gamma_size: 512, ..p };
        assert_eq!(cp_encoding_lengths(&bad, CpBranch::Extract, &mut out), CpStatus::Analysis);
    }
}

fn header() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include").join("cellprobe.h")
}

#[test]
fn header_declares_the_api() {
    let text = std::fs::read_to_string(header()).unwrap();
    for name in [
        "cp_last_error_message",
        "cp_machine_new",
        "cp_machine_free",
        "cp_machine_trace_dump",
        "cp_session_new",
        "cp_session_query",
        "cp_resolution_probability",
        "cp_encoding_lengths",
        "typedef struct CpSession CpSession;",
        "CP_STATUS_BUFFER_TOO_SMALL = 6",
    ] {
        assert!(text.contains(name), "header lacks {name}");
    }
}

#[test]
fn header_compiles_as_c() {
    let src = std::env::temp_dir().join(format!("cellprobe_hdr_{}.c", std::process::id()));
    std::fs::write(
        &src,
        "#include \"cellprobe.h\"\nint main(void) { CpMachine *m = 0; return cp_machine_new(4, 8, 0, 1, &m) == CP_STATUS_OK ? 0 : 1; }\n",
    )
    .unwrap();
    let status = Command::new("cc")
        .arg("-fsyntax-only")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(header().parent().unwrap())
        .arg(&src)
        .status()
        .expect("a C compiler named cc");
    std::fs::remove_file(&src).ok();
    assert!(status.success());
}
