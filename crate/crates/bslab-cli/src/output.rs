//! Output formatting and atomic file writes.

use bslab::det::DetEval;
use bslab::{BsError, Complex64};
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

pub const SCAN_HEADER: &str =
    "k_re,k_im,psi_re,psi_im,logabs_psi,logabs_D4,psi2_re,psi2_im,psi3_re,psi3_im,L,n,tail_bound,error";

/// Writes `contents` to `path` through a temporary file in the same
/// directory followed by a rename, or to standard output when `path` is None.
pub fn emit(path: Option<&Path>, contents: &str) -> std::io::Result<()> {
    let Some(path) = path else {
        let mut out = std::io::stdout().lock();
        out.write_all(contents.as_bytes())?;
        return out.flush();
    };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let name = path.file_name().ok_or_else(|| std::io::Error::other(format!("{} is not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    let result = (|| {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
        std::fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = std::fs::remove_file(&tmp);
    }
    result
}

/// Shortest round-trip decimal, switching to exponent form for very small or
/// very large magnitudes.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || (1e-4..1e16).contains(&a) || !a.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn csv_text(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\"").replace('\n', " "))
    } else {
        s.to_string()
    }
}

/// Scan table with one row per wave number, in input order. Rows whose
/// evaluation failed keep k and carry the error text.
pub fn scan_csv(params_hash: &str, ks: &[Complex64], rows: &[Result<DetEval, BsError>]) -> String {
    let mut s = format!("# params_hash={params_hash}\n{SCAN_HEADER}\n");
    for (k, row) in ks.iter().zip(rows) {
        match row {
            Ok(e) => {
                let d = &e.diagnostics;
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{},{},{},{},{},{},{},",
                    num(k.re),
                    num(k.im),
                    num(e.psi.re),
                    num(e.psi.im),
                    num(e.log_abs_psi),
                    num(e.log_abs_d4),
                    num(e.psi2.re),
                    num(e.psi2.im),
                    num(e.psi3.re),
                    num(e.psi3.im),
                    d.l,
                    d.n,
                    num(d.tail_bound)
                );
            }
            Err(err) => {
                let _ = writeln!(s, "{},{},,,,,,,,,,,,{}", num(k.re), num(k.im), csv_text(&err.to_string()));
            }
        }
    }
    s
}

/// Boundary samples `t,h`.
pub fn boundary_csv(params_hash: &str, t: &[f64], h: &[f64]) -> String {
    let mut s = format!("# params_hash={params_hash}\nt,h\n");
    for (t, h) in t.iter().zip(h) {
        let _ = writeln!(s, "{},{}", num(*t), num(*h));
    }
    s
}

pub fn json_text(value: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("json serializes");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn emit_replaces_file_atomically() {
        let dir = std::env::temp_dir().join(format!("bslab-emit-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("out.txt");
        emit(Some(&path), "first").unwrap();
        emit(Some(&path), "second").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "second");
        let leftovers: Vec<_> = std::fs::read_dir(&dir).unwrap().filter_map(|e| e.ok()).filter(|e| e.file_name() != "out.txt").collect();
        assert!(leftovers.is_empty());
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn numbers_round_trip() {
        for x in [0.0, -1.0, 0.1, 3.25e-12, -7.5e20, 1234.5678, f64::MIN_POSITIVE] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(num(2.5e-12), "2.5e-12");
        assert_eq!(num(-1.0), "-1");
    }

    #[test]
    fn error_rows_keep_their_column_count() {
        let ks = [Complex64::new(1.0, 0.0)];
        let rows = [Err(BsError::NumericFailure("a, \"b\"".into()))];
        let csv = scan_csv("h", &ks, &rows);
        let line = csv.lines().nth(2).unwrap();
        assert!(line.starts_with("1,0,,"));
        assert!(line.ends_with("\"numeric failure: a, \"\"b\"\"\""));
        assert_eq!(SCAN_HEADER.split(',').count(), 14);
    }
}
