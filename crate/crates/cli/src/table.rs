// Copyright 2026 The spectral-casimir authors
//
// Licensed under the Apache license, version 2.0 (the "license");
// you may not use this file except in compliance with the license.
// You may obtain a copy of the license at
//
//     http://www.apache.org/licenses/license-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the license is distributed on an "as is" basis,
// without warranties or conditions of any kind, either express or implied.
// See the license for the specific language governing permissions and
// limitations under the license.

//! Sweep tables as CSV: '#' comment preamble, fixed header, one row per point.

use crate::error::CliError;

pub const HEADER: [&str; 6] = [
    "z_over_a",
    "energy_reduced",
    "force_reduced",
    "beta",
    "l_max_used",
    "converged",
];

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub z_over_a: f64,
    pub energy_reduced: f64,
    pub force_reduced: f64,
    pub beta: Option<f64>,
    pub l_max_used: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    /// Comment lines without the leading "# ".
    pub comments: Vec<String>,
    pub has_beta: bool,
    pub rows: Vec<SweepRow>,
}

/// Shortest decimal that parses back to the same f64.
pub fn format_float(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || !v.is_finite() || (1e-5..1e16).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn parse_float(s: &str, what: &str) -> Result<f64, CliError> {
    s.parse::<f64>()
        .map_err(|_| CliError::Csv(format!("bad {what} value '{s}'")))
}

impl SweepTable {
    pub fn header(&self) -> Vec<&'static str> {
        HEADER
            .iter()
            .copied()
            .filter(|h| self.has_beta || *h != "beta")
            .collect()
    }

    pub fn to_csv_string(&self) -> Result<String, CliError> {
        let mut out = String::new();
        for c in &self.comments {
            out.push_str("# ");
            out.push_str(c);
            out.push('\n');
        }
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(self.header())?;
        for r in &self.rows {
            let mut rec = vec![
                format_float(r.z_over_a),
                format_float(r.energy_reduced),
                format_float(r.force_reduced),
            ];
            if self.has_beta {
                rec.push(r.beta.map(format_float).unwrap_or_default());
            }
            rec.push(r.l_max_used.to_string());
            rec.push(r.converged.to_string());
            w.write_record(&rec)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Csv(e.to_string()))?;
        out.push_str(&String::from_utf8(bytes).expect("ascii output"));
        Ok(out)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let comments: Vec<String> = text
            .lines()
            .take_while(|l| l.starts_with('#'))
            .map(|l| l.strip_prefix("# ").unwrap_or(&l[1..]).to_string())
            .collect();
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        let has_beta = header.iter().any(|h| h == "beta");
        let expected: Vec<&str> = HEADER
            .iter()
            .copied()
            .filter(|h| has_beta || *h != "beta")
            .collect();
        if header != expected {
            return Err(CliError::Csv(format!("unexpected header {header:?}")));
        }
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let field = |name: &str| -> &str {
                let i = expected.iter().position(|h| *h == name).unwrap();
                rec.get(i).unwrap_or("")
            };
            let beta = if has_beta && !field("beta").is_empty() {
                Some(parse_float(field("beta"), "beta")?)
            } else {
                None
            };
            rows.push(SweepRow {
                z_over_a: parse_float(field("z_over_a"), "z_over_a")?,
                energy_reduced: parse_float(field("energy_reduced"), "energy_reduced")?,
                force_reduced: parse_float(field("force_reduced"), "force_reduced")?,
                beta,
                l_max_used: field("l_max_used")
                    .parse()
                    .map_err(|_| CliError::Csv("bad l_max_used".into()))?,
                converged: field("converged")
                    .parse()
                    .map_err(|_| CliError::Csv("bad converged flag".into()))?,
            });
        }
        Ok(Self { comments, has_beta, rows })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn table(rows: Vec<SweepRow>, has_beta: bool) -> SweepTable {
        SweepTable {
            comments: vec!["casimir 0.1.0".into(), "sweep z_min=0.1".into()],
            has_beta,
            rows,
        }
    }

    #[test]
    fn layout() {
        let t = table(
            vec![SweepRow {
                z_over_a: 0.1,
                energy_reduced: -0.37188,
                force_reduced: -4.4615e-7,
                beta: None,
                l_max_used: 256,
                converged: true,
            }],
            true,
        );
        let s = t.to_csv_string().unwrap();
        assert_eq!(
            s,
            "# casimir 0.1.0\n# sweep z_min=0.1\n\
             z_over_a,energy_reduced,force_reduced,beta,l_max_used,converged\n\
             0.1,-0.37188,-4.4615e-7,,256,true\n"
        );
    }

    #[test]
    fn header_mismatch_rejected() {
        assert!(SweepTable::parse("a,b\n1,2\n").is_err());
    }

    fn row() -> impl Strategy<Value = SweepRow> {
        (
            1e-3f64..1e3,
            prop_oneof![-1e3f64..0.0, -1e-30f64..0.0],
            -1e6f64..1e6,
            proptest::option::of(-10.0f64..10.0),
            1usize..3000,
            any::<bool>(),
        )
            .prop_map(|(z, e, f, b, l, c)| SweepRow {
                z_over_a: z,
                energy_reduced: e,
                force_reduced: f,
                beta: b,
                l_max_used: l,
                converged: c,
            })
    }

    proptest! {
        #[test]
        fn round_trip_is_byte_identical(rows in proptest::collection::vec(row(), 0..20), has_beta in any::<bool>()) {
            let rows: Vec<SweepRow> = rows
                .into_iter()
                .map(|mut r| { if !has_beta { r.beta = None; } r })
                .collect();
            let t = table(rows, has_beta);
            let s = t.to_csv_string().unwrap();
            let back = SweepTable::parse(&s).unwrap();
            prop_assert_eq!(&back, &t);
            prop_assert_eq!(back.to_csv_string().unwrap(), s);
        }

        #[test]
        fn floats_round_trip(v in any::<f64>().prop_filter("finite", |v| v.is_finite())) {
            prop_assert_eq!(format_float(v).parse::<f64>().unwrap(), v);
        }
    }
}
