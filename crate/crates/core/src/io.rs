//! Text formats. TSV for keyed data (`key<TAB>value`, no header), CSV with a
//! header row for tables. Reals are written with 17 significant digits so
//! every `f64` survives a write/read cycle unchanged.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::estimators::MomentTable;
use crate::experiments::SweepRow;
use crate::freq::{PdfFamily, SanitizerTable};
use crate::keys::ReportingVector;
use crate::sampling::{aggregate_elements, KeyedHistogram, WeightedSample};

/// `x` with 17 significant digits.
pub fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

fn lines<R: BufRead>(reader: R) -> impl Iterator<Item = Result<(usize, String)>> {
    reader
        .lines()
        .enumerate()
        .map(|(n, l)| l.map(|l| (n + 1, l.strip_suffix('\r').map(str::to_owned).unwrap_or(l))).map_err(Error::from))
        .filter(|r| !matches!(r, Ok((_, l)) if l.is_empty()))
}

// The value is the last tab-separated field so keys may contain tabs.
fn split_tsv(line_no: usize, line: &str) -> Result<(String, String)> {
    line.rsplit_once('\t')
        .map(|(k, v)| (k.to_owned(), v.trim().to_owned()))
        .ok_or_else(|| Error::parse(line_no, "expected `key<TAB>value`"))
}

fn parse_num<T: std::str::FromStr>(line_no: usize, field: &str, what: &str) -> Result<T> {
    field
        .parse()
        .map_err(|_| Error::parse(line_no, format!("`{field}` is not a valid {what}")))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path)?))
}

/// One key per line; blank lines are skipped.
pub fn read_elements<R: BufRead>(reader: R) -> Result<KeyedHistogram> {
    let keys = lines(reader).map(|r| r.map(|(_, l)| l)).collect::<Result<Vec<_>>>()?;
    Ok(aggregate_elements(keys))
}

fn read_pairs<R: BufRead, T: std::str::FromStr>(reader: R, what: &str) -> Result<Vec<(String, T)>> {
    lines(reader)
        .map(|r| {
            let (n, line) = r?;
            let (k, v) = split_tsv(n, &line)?;
            Ok((k, parse_num(n, &v, what)?))
        })
        .collect()
}

/// Aggregated `key<TAB>frequency`.
pub fn read_histogram<R: BufRead>(reader: R) -> Result<KeyedHistogram> {
    KeyedHistogram::from_pairs(read_pairs::<_, u64>(reader, "frequency")?)
}

pub fn read_histogram_file<P: AsRef<Path>>(path: P) -> Result<KeyedHistogram> {
    read_histogram(open(path.as_ref())?)
}

pub fn read_elements_file<P: AsRef<Path>>(path: P) -> Result<KeyedHistogram> {
    read_elements(open(path.as_ref())?)
}

/// A sample in histogram format; pairs keep file order.
pub fn read_sample_pairs<R: BufRead>(reader: R) -> Result<Vec<(String, u64)>> {
    let pairs = read_pairs::<_, u64>(reader, "frequency")?;
    // reuse the duplicate and zero checks
    KeyedHistogram::from_pairs(pairs.iter().map(|(k, w)| (k.as_str(), *w)))?;
    Ok(pairs)
}

/// `key<TAB>token`.
pub fn read_tokens<R: BufRead>(reader: R) -> Result<Vec<(String, usize)>> {
    read_pairs(reader, "token")
}

/// `key<TAB>value` with a real value, as written by the baseline.
pub fn read_real_pairs<R: BufRead>(reader: R) -> Result<Vec<(String, f64)>> {
    read_pairs(reader, "number")
}

/// A predicate file: one key per line, optionally `key<TAB>weight`.
pub fn read_weights<R: BufRead>(reader: R) -> Result<Vec<(String, f64)>> {
    lines(reader)
        .map(|r| {
            let (n, line) = r?;
            match line.rsplit_once('\t') {
                Some((k, v)) => Ok((k.to_owned(), parse_num(n, v.trim(), "weight")?)),
                None => Ok((line, 1.0)),
            }
        })
        .collect()
}

pub fn write_histogram<W: Write>(mut out: W, data: &KeyedHistogram) -> Result<()> {
    for (k, w) in data.iter() {
        writeln!(out, "{k}\t{w}")?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_sample<W: Write>(mut out: W, sample: &WeightedSample) -> Result<()> {
    for (k, w) in sample.pairs() {
        writeln!(out, "{k}\t{w}")?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_keys<W: Write>(mut out: W, keys: &[String]) -> Result<()> {
    for k in keys {
        writeln!(out, "{k}")?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_tokens<W: Write>(mut out: W, tokens: &[(String, usize)]) -> Result<()> {
    for (k, j) in tokens {
        writeln!(out, "{k}\t{j}")?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_real_pairs<W: Write>(mut out: W, pairs: &[(String, f64)]) -> Result<()> {
    for (k, v) in pairs {
        writeln!(out, "{k}\t{}", fmt_real(*v))?;
    }
    out.flush()?;
    Ok(())
}

fn csv_writer<W: Write>(out: W, header: &[&str]) -> Result<csv::Writer<W>> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    Ok(w)
}

/// `i,q_i,pi_i,p_i` for `i = 0..=max`, where `p_i = π_i / q_i` is the keep
/// probability (empty when `q_i = 0`).
pub fn write_pi_csv<W: Write>(out: W, rv: &ReportingVector) -> Result<()> {
    let mut w = csv_writer(out, &["i", "q_i", "pi_i", "p_i"])?;
    for i in 0..=rv.max_frequency() {
        let keep = rv.keep_prob(i).map(fmt_real).unwrap_or_default();
        w.write_record([i.to_string(), fmt_real(rv.q(i).unwrap()), fmt_real(rv.pi(i).unwrap()), keep])?;
    }
    w.flush()?;
    Ok(())
}

/// `i,j,pi_ij`: for every row, token 0 then every token in the row's band.
pub fn write_pij_csv<W: Write>(out: W, table: &SanitizerTable) -> Result<()> {
    let mut w = csv_writer(out, &["i", "j", "pi_ij"])?;
    for (i, row) in table.rows().iter().enumerate() {
        let i = i.to_string();
        w.write_record([i.as_str(), "0", &fmt_real(row.not_reported())])?;
        for (j, p) in row.iter() {
            w.write_record([i.clone(), j.to_string(), fmt_real(p)])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads `i,j,pi_ij` back into a bare table; rows must be `0..=max` with no
/// gaps and each must sum to one.
pub fn read_pij_csv<R: Read>(input: R) -> Result<SanitizerTable> {
    let mut rdr = csv::Reader::from_reader(input);
    let mut entries: Vec<(usize, usize, f64)> = Vec::new();
    for (n, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = n + 2;
        if rec.len() != 3 {
            return Err(Error::parse(line, "expected `i,j,pi_ij`"));
        }
        let i = parse_num(line, rec[0].trim(), "row index")?;
        let j = parse_num(line, rec[1].trim(), "token")?;
        let p: f64 = parse_num(line, rec[2].trim(), "probability")?;
        entries.push((i, j, p));
    }
    let rows = entries.iter().map(|e| e.0).max().map_or(0, |m| m + 1);
    let width = entries.iter().map(|e| e.1).max().map_or(0, |m| m + 1);
    let mut dense = vec![vec![0.0; width]; rows];
    let mut seen = vec![false; rows];
    for &(i, j, p) in &entries {
        dense[i][j] += p;
        seen[i] = true;
    }
    if let Some(i) = seen.iter().position(|s| !s) {
        return Err(Error::InvalidParameter(format!("table has no entries for row {i}")));
    }
    SanitizerTable::from_dense_rows(&dense)
}

pub fn read_pij_file<P: AsRef<Path>>(path: P) -> Result<SanitizerTable> {
    read_pij_csv(open(path.as_ref())?)
}

/// `i,left,right,density` for every segment of every density.
pub fn write_pdf_segments_csv<W: Write>(out: W, family: &PdfFamily) -> Result<()> {
    let mut w = csv_writer(out, &["i", "left", "right", "density"])?;
    for pdf in family.pdfs() {
        for s in pdf.segments() {
            w.write_record([pdf.frequency().to_string(), fmt_real(s.left), fmt_real(s.right), fmt_real(s.density)])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `i,atom0`.
pub fn write_pdf_atoms_csv<W: Write>(out: W, family: &PdfFamily) -> Result<()> {
    let mut w = csv_writer(out, &["i", "atom0"])?;
    for pdf in family.pdfs() {
        w.write_record([pdf.frequency().to_string(), fmt_real(pdf.atom0())])?;
    }
    w.flush()?;
    Ok(())
}

/// `j,left,right` for the intervals behind the tokens of a discretized table.
pub fn write_token_intervals_csv<W: Write>(out: W, table: &SanitizerTable) -> Result<()> {
    let mut w = csv_writer(out, &["j", "left", "right"])?;
    for j in 1..=table.num_tokens() {
        if let Some((a, b)) = table.token_interval(j) {
            w.write_record([j.to_string(), fmt_real(a), fmt_real(b)])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `i,E_i,Bias_i,Var_i,MSE_i`.
pub fn write_moments_csv<W: Write>(out: W, moments: &MomentTable) -> Result<()> {
    let mut w = csv_writer(out, &["i", "E_i", "Bias_i", "Var_i", "MSE_i"])?;
    for m in moments.rows() {
        w.write_record([
            m.frequency.to_string(),
            fmt_real(m.expectation),
            fmt_real(m.bias),
            fmt_real(m.variance),
            fmt_real(m.mse),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `i1,i2,concordance`.
pub fn write_concordance_csv<W: Write>(out: W, pairs: &[(u64, u64, f64)]) -> Result<()> {
    let mut w = csv_writer(out, &["i1", "i2", "concordance"])?;
    for &(a, b, c) in pairs {
        w.write_record([a.to_string(), b.to_string(), fmt_real(c)])?;
    }
    w.flush()?;
    Ok(())
}

/// `sweep_var,value,method,metric,result`; undefined results are written as
/// `undefined`.
pub fn write_sweep_csv<W: Write>(out: W, rows: &[SweepRow]) -> Result<()> {
    let mut w = csv_writer(out, &["sweep_var", "value", "method", "metric", "result"])?;
    for r in rows {
        w.write_record([
            r.sweep_var.to_string(),
            fmt_real(r.value),
            r.method.to_string(),
            r.metric.to_string(),
            r.result.map_or_else(|| "undefined".to_string(), fmt_real),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Buffered file writer, or stdout for `None` / `-`.
pub fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) if p != Path::new("-") => Box::new(BufWriter::new(File::create(p)?)),
        _ => Box::new(BufWriter::new(std::io::stdout().lock())),
    })
}

/// Buffered file reader, or stdin for `-`.
pub fn input(path: &Path) -> Result<Box<dyn BufRead>> {
    Ok(if path == Path::new("-") {
        Box::new(BufReader::new(std::io::stdin().lock()))
    } else {
        Box::new(open(path)?)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::freq::compute_pij;
    use crate::privacy::PrivacyParams;
    use crate::sampling::SamplingScheme;

    #[test]
    fn reals_round_trip() {
        for x in [0.1, 1.0 / 3.0, 1e-300, 5e-324, 0.01 * (1.0 + f64::EPSILON), 0.0, 1.0] {
            assert_eq!(fmt_real(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn histogram_tsv() {
        let h = read_histogram("a\t3\nb c\t1\n\nx\ty\t2\r\n".as_bytes()).unwrap();
        assert_eq!(h.get("a"), Some(3));
        assert_eq!(h.get("b c"), Some(1));
        assert_eq!(h.get("x\ty"), Some(2));
        let mut buf = Vec::new();
        write_histogram(&mut buf, &h).unwrap();
        assert_eq!(read_histogram(buf.as_slice()).unwrap(), h);

        match read_histogram("a\t3\nb\tx\n".as_bytes()) {
            Err(Error::Parse { line: 2, .. }) => {}
            other => panic!("{other:?}"),
        }
        assert!(read_histogram("a\t0\n".as_bytes()).is_err());
        assert!(read_histogram("a\t1\na\t2\n".as_bytes()).is_err());
        assert!(read_histogram("nofield\n".as_bytes()).is_err());
    }

    #[test]
    fn element_stream() {
        let h = read_elements("a\nb\na\n\na\n".as_bytes()).unwrap();
        assert_eq!((h.get("a"), h.get("b"), h.len()), (Some(3), Some(1), 2));
    }

    #[test]
    fn weights_default_to_one() {
        let w = read_weights("a\nb\t2.5\n".as_bytes()).unwrap();
        assert_eq!(w, vec![("a".to_string(), 1.0), ("b".to_string(), 2.5)]);
    }

    #[test]
    fn pij_round_trip_is_lossless() {
        let params = PrivacyParams::new(0.5, 0.01).unwrap();
        let t = compute_pij(&params, &SamplingScheme::none(), 40);
        let mut buf = Vec::new();
        write_pij_csv(&mut buf, &t).unwrap();
        let back = read_pij_csv(buf.as_slice()).unwrap();
        assert_eq!(back.max_frequency(), 40);
        for i in 0..=40 {
            assert_eq!(back.dense_row(i).unwrap(), t.dense_row(i).unwrap());
        }
        assert!(back.verify_dp(&params).satisfied);
    }

    #[test]
    fn pij_import_rejects_gaps() {
        assert!(read_pij_csv("i,j,pi_ij\n0,0,1\n2,0,1\n".as_bytes()).is_err());
        assert!(read_pij_csv("i,j,pi_ij\n0,0,0.5\n".as_bytes()).is_err());
        assert!(read_pij_csv("i,j,pi_ij\n0,zero,1\n".as_bytes()).is_err());
    }
}
