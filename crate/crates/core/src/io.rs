//! Sample CSV format: header `d,y,x1,...,xK`, one unit per row.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{AteError, Result};
use crate::model::{Sample, Unit};

pub fn read_sample_csv(path: impl AsRef<Path>) -> Result<Sample> {
    let file = std::fs::File::open(path.as_ref())
        .map_err(|e| AteError::Io(format!("{}: {e}", path.as_ref().display())))?;
    parse_sample_csv(file)
}

pub fn parse_sample_csv<R: Read>(reader: R) -> Result<Sample> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let header = rdr.headers().map_err(csv_error)?.clone();
    check_header(&header)?;
    let k = header.len() - 2;

    let mut units = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |j: usize| -> Result<f64> {
            record[j].parse::<f64>().map_err(|_| AteError::Parse {
                line,
                message: format!(
                    "column {} value {:?} is not a number",
                    &header[j], &record[j]
                ),
            })
        };
        let d = match &record[0] {
            "0" => 0,
            "1" => 1,
            other => {
                return Err(AteError::Parse {
                    line,
                    message: format!("treatment must be 0 or 1, got {other:?}"),
                })
            }
        };
        let y = field(1)?;
        let x = (0..k).map(|j| field(j + 2)).collect::<Result<Vec<_>>>()?;
        let unit = Unit::from_values(d, y, x).map_err(|e| AteError::Parse {
            line,
            message: e.to_string(),
        })?;
        units.push(unit);
    }
    Sample::new(units)
}

fn check_header(header: &csv::StringRecord) -> Result<()> {
    let bad = |message: String| Err(AteError::Parse { line: 1, message });
    if header.len() < 2 || &header[0] != "d" || &header[1] != "y" {
        return bad(format!(
            "header must start with d,y, got {:?}",
            header.iter().collect::<Vec<_>>()
        ));
    }
    for (j, name) in header.iter().skip(2).enumerate() {
        if name != format!("x{}", j + 1) {
            return bad(format!("expected column x{}, got {name:?}", j + 1));
        }
    }
    Ok(())
}

fn csv_error(err: csv::Error) -> AteError {
    let line = err.position().map_or(0, |p| p.line());
    match err.kind() {
        csv::ErrorKind::UnequalLengths {
            expected_len, len, ..
        } => AteError::Parse {
            line,
            message: format!("expected {expected_len} fields, found {len}"),
        },
        _ => AteError::Parse {
            line,
            message: err.to_string(),
        },
    }
}

/// Writes a sample in the same format, reals with 17 significant digits.
pub fn write_sample_csv<W: Write>(sample: &Sample, mut out: W) -> Result<()> {
    let mut header = String::from("d,y");
    for j in 1..=sample.dim() {
        header.push_str(&format!(",x{j}"));
    }
    writeln!(out, "{header}")?;
    for u in sample.units() {
        let mut row = format!("{},{:.16e}", u.d() as u8, u.y());
        for v in u.x() {
            row.push_str(&format!(",{v:.16e}"));
        }
        writeln!(out, "{row}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_micro_sample() {
        let s = parse_sample_csv("d,y,x1\n1,2,0.5\n0,1,-0.5\n".as_bytes()).unwrap();
        assert_eq!(s.n(), 2);
        assert_eq!(s.dim(), 1);
        assert_eq!(s.units()[1].x(), &[-0.5]);
    }

    #[test]
    fn wrong_arity_cites_line() {
        let err = parse_sample_csv("d,y,x1\n1,2,0.5\n0,1\n".as_bytes()).unwrap_err();
        match err {
            AteError::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_treatment_and_header() {
        assert!(matches!(
            parse_sample_csv("d,y\n2,1\n1,1\n".as_bytes()),
            Err(AteError::Parse { line: 2, .. })
        ));
        assert!(parse_sample_csv("y,d\n1,1\n".as_bytes()).is_err());
        assert!(parse_sample_csv("d,y,z\n1,1,1\n0,1,1\n".as_bytes()).is_err());
    }

    #[test]
    fn write_then_read_is_exact() {
        let s = parse_sample_csv("d,y,x1,x2\n1,0.1,0.3,-7e-12\n0,3.14159,2,1e300\n".as_bytes())
            .unwrap();
        let mut buf = Vec::new();
        write_sample_csv(&s, &mut buf).unwrap();
        assert_eq!(parse_sample_csv(buf.as_slice()).unwrap(), s);
    }
}
