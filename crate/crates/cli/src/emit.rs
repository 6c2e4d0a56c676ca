//! CSV and JSON-lines writers for result tables.

use std::io::Write;

use serde::Serialize;

use crate::config::Format;
use crate::sweep::{ResultRow, SummaryRow};

/// Column order of the campaign table.
pub const HEADER: [&str; 10] = [
    "protocol",
    "K",
    "seed",
    "avg_attempts",
    "fail_prob",
    "markov_bound",
    "sum_rate_bps",
    "mean_active",
    "mean_pdps",
    "ues_per_pdp",
];

/// `x` with 6 significant digits, fixed notation for moderate magnitudes.
pub fn sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return x.to_string();
    }
    // take the exponent after rounding, so 999999.5 goes to 1.00000e6
    let sci = format!("{x:.5e}");
    let exp: i32 = sci.split_once('e').and_then(|(_, e)| e.parse().ok()).expect("exponent");
    if (-4..6).contains(&exp) {
        let s = format!("{:.*}", (5 - exp) as usize, x);
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        sci
    }
}

fn round6(x: f64) -> f64 {
    sig6(x).parse().expect("sig6 output parses")
}

impl ResultRow {
    /// The row as written: every float rounded to 6 significant digits.
    pub fn rounded(&self) -> ResultRow {
        ResultRow {
            avg_attempts: round6(self.avg_attempts),
            fail_prob: round6(self.fail_prob),
            markov_bound: round6(self.markov_bound),
            sum_rate_bps: round6(self.sum_rate_bps),
            mean_active: round6(self.mean_active),
            mean_pdps: round6(self.mean_pdps),
            ues_per_pdp: round6(self.ues_per_pdp),
            ..self.clone()
        }
    }
}

fn csv_record(r: &ResultRow) -> [String; 10] {
    [
        r.protocol.clone(),
        r.k.to_string(),
        r.seed.to_string(),
        sig6(r.avg_attempts),
        sig6(r.fail_prob),
        sig6(r.markov_bound),
        sig6(r.sum_rate_bps),
        sig6(r.mean_active),
        sig6(r.mean_pdps),
        sig6(r.ues_per_pdp),
    ]
}

/// Writes the campaign table.
pub fn write_rows<W: Write>(rows: &[ResultRow], format: Format, out: W) -> anyhow::Result<()> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(HEADER)?;
            for r in rows {
                w.write_record(csv_record(r))?;
            }
            w.flush()?;
        }
        Format::JsonLines => write_json_lines(rows.iter().map(ResultRow::rounded), out)?,
    }
    Ok(())
}

fn write_json_lines<T: Serialize, W: Write>(items: impl Iterator<Item = T>, mut out: W) -> anyhow::Result<()> {
    for item in items {
        serde_json::to_writer(&mut out, &item)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a table written by [`write_rows`] in CSV.
pub fn read_rows_csv<R: std::io::Read>(input: R) -> anyhow::Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(String::from).collect();
    anyhow::ensure!(header == HEADER, "unexpected header {header:?}");
    Ok(r.deserialize().collect::<Result<_, _>>()?)
}

const METRICS: [&str; 7] = [
    "avg_attempts",
    "fail_prob",
    "markov_bound",
    "sum_rate_bps",
    "mean_active",
    "mean_pdps",
    "ues_per_pdp",
];

fn estimates(s: &SummaryRow) -> [crate::sweep::Estimate; 7] {
    [
        s.avg_attempts,
        s.fail_prob,
        s.markov_bound,
        s.sum_rate_bps,
        s.mean_active,
        s.mean_pdps,
        s.ues_per_pdp,
    ]
}

/// Writes per-(protocol, K) means and standard errors; each metric `m`
/// becomes the columns `m_mean` and `m_se`.
pub fn write_summary<W: Write>(rows: &[SummaryRow], format: Format, out: W) -> anyhow::Result<()> {
    let mut header = vec!["protocol".to_string(), "K".into(), "seeds".into()];
    for m in METRICS {
        header.push(format!("{m}_mean"));
        header.push(format!("{m}_se"));
    }
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(&header)?;
            for s in rows {
                let mut rec = vec![s.protocol.clone(), s.k.to_string(), s.seeds.to_string()];
                for e in estimates(s) {
                    rec.push(sig6(e.mean));
                    rec.push(sig6(e.se));
                }
                w.write_record(&rec)?;
            }
            w.flush()?;
        }
        Format::JsonLines => {
            let objects = rows.iter().map(|s| {
                let mut obj = serde_json::Map::new();
                obj.insert("protocol".into(), s.protocol.clone().into());
                obj.insert("K".into(), s.k.into());
                obj.insert("seeds".into(), s.seeds.into());
                for (m, e) in METRICS.iter().zip(estimates(s)) {
                    obj.insert(format!("{m}_mean"), round6(e.mean).into());
                    obj.insert(format!("{m}_se"), round6(e.se).into());
                }
                serde_json::Value::Object(obj)
            });
            write_json_lines(objects, out)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row() -> ResultRow {
        ResultRow {
            protocol: "novr-xl".into(),
            k: 2000,
            seed: 7,
            avg_attempts: 5.87912345,
            fail_prob: 0.520123456,
            markov_bound: 0.587912345,
            sum_rate_bps: 1.53812345e10,
            mean_active: 84.0,
            mean_pdps: 72.123456,
            ues_per_pdp: 1.16098765,
        }
    }

    #[test]
    fn six_significant_digits() {
        assert_eq!(sig6(5.87912345), "5.87912");
        assert_eq!(sig6(84.0), "84");
        assert_eq!(sig6(0.000123456789), "0.000123457");
        assert_eq!(sig6(1.53812345e10), "1.53812e10");
        assert_eq!(sig6(999999.5), "1.00000e6");
        assert_eq!(sig6(-2.5), "-2.5");
        assert_eq!(sig6(0.0), "0");
    }

    #[test]
    fn empty_table_is_header_only() {
        let mut buf = Vec::new();
        write_rows(&[], Format::Csv, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), format!("{}\n", HEADER.join(",")));
        let mut buf = Vec::new();
        write_rows(&[], Format::JsonLines, &mut buf).unwrap();
        assert!(buf.is_empty());
    }

    #[test]
    fn csv_round_trip() {
        let mut buf = Vec::new();
        write_rows(&[row()], Format::Csv, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert_eq!(
            text.lines().nth(1).unwrap(),
            "novr-xl,2000,7,5.87912,0.520123,0.587912,1.53812e10,84,72.1235,1.16099"
        );
        assert_eq!(read_rows_csv(&buf[..]).unwrap(), vec![row().rounded()]);
    }

    #[test]
    fn json_keys_match_csv_header() {
        let mut buf = Vec::new();
        write_rows(&[row(), row()], Format::JsonLines, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 2);
        for line in text.lines() {
            let v: serde_json::Value = serde_json::from_str(line).unwrap();
            let keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
            let mut expect = HEADER.to_vec();
            expect.sort();
            let mut keys = keys;
            keys.sort();
            assert_eq!(keys, expect);
            let back: ResultRow = serde_json::from_value(v).unwrap();
            assert_eq!(back, row().rounded());
        }
    }

    #[test]
    fn summary_columns() {
        let rows = crate::sweep::summarize(&[row(), ResultRow { seed: 8, ..row() }]);
        let mut buf = Vec::new();
        write_summary(&rows, Format::Csv, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        let header = lines.next().unwrap();
        assert!(header.starts_with("protocol,K,seeds,avg_attempts_mean,avg_attempts_se,"));
        assert!(lines.next().unwrap().starts_with("novr-xl,2000,2,5.87912,0,"));
    }
}
