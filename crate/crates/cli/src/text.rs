//! Palette files and distortion tables.
//!
//! Palette: one color per line, `M` whitespace-separated decimals, `#`
//! starts a comment. Table: CSV rows `t,L` with an optional `t,L` header;
//! the comment lines `# e: e1 e2 ...` and `# extrapolation: clamp|linear`
//! carry the direction and the extrapolation rule.

use std::path::Path;

use chromapart::{DistortionTable, Extrapolation, Palette};

use crate::error::{CliError, Result};

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn numbers(s: &str) -> std::result::Result<Vec<f64>, String> {
    s.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| format!("invalid number '{t}'"))
        })
        .collect()
}

pub fn parse_palette(text: &str) -> std::result::Result<Vec<Vec<f64>>, String> {
    let mut colors = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let color = numbers(line).map_err(|m| format!("line {}: {m}", i + 1))?;
        if color.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(format!("line {}: values must lie in [0, 1]", i + 1));
        }
        if colors.first().is_some_and(|c: &Vec<f64>| c.len() != color.len()) {
            return Err(format!("line {}: expected {} values", i + 1, colors[0].len()));
        }
        colors.push(color);
    }
    if colors.is_empty() {
        return Err("no colors".into());
    }
    Ok(colors)
}

pub fn read_palette(path: &Path) -> Result<Palette> {
    let colors = parse_palette(&read_text(path)?).map_err(|m| CliError::parse(path, m))?;
    Ok(Palette::new(colors)?)
}

pub fn format_palette(palette: &Palette) -> String {
    palette
        .colors()
        .iter()
        .map(|c| c.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ") + "\n")
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableFile {
    pub direction: Option<Vec<f64>>,
    pub extrapolation: Extrapolation,
    pub samples: Vec<(f64, f64)>,
}

pub fn parse_table(text: &str) -> std::result::Result<TableFile, String> {
    let mut file = TableFile { direction: None, extrapolation: Extrapolation::ClampEnds, samples: Vec::new() };
    let mut seen_data = false;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        let at = |m: String| format!("line {}: {m}", i + 1);
        if let Some(comment) = line.strip_prefix('#') {
            let comment = comment.trim();
            if let Some(e) = comment.strip_prefix("e:") {
                file.direction = Some(numbers(e).map_err(at)?);
            } else if let Some(x) = comment.strip_prefix("extrapolation:") {
                file.extrapolation = match x.trim() {
                    "clamp" => Extrapolation::ClampEnds,
                    "linear" => Extrapolation::LinearEnds,
                    other => return Err(at(format!("unknown extrapolation '{other}'"))),
                };
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        if !seen_data && line.replace(' ', "").eq_ignore_ascii_case("t,l") {
            seen_data = true;
            continue;
        }
        seen_data = true;
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let [t, l] = fields[..] else {
            return Err(at(format!("expected 2 fields, found {}", fields.len())));
        };
        let parse = |s: &str| s.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| at(format!("invalid number '{s}'")));
        file.samples.push((parse(t)?, parse(l)?));
    }
    if file.samples.is_empty() {
        return Err("no samples".into());
    }
    Ok(file)
}

/// Reads a table; the direction comes from `direction_override`, the file,
/// or defaults to `(1,…,1)/√M`, in that order.
pub fn read_table(path: &Path, channels: usize, direction_override: Option<&[f64]>) -> Result<DistortionTable> {
    let file = parse_table(&read_text(path)?).map_err(|m| CliError::parse(path, m))?;
    let direction = match (direction_override, file.direction) {
        (Some(e), _) => e.to_vec(),
        (None, Some(e)) => e,
        (None, None) => vec![1.0; channels],
    };
    if direction.len() != channels {
        return Err(CliError::Validation(format!(
            "{}: direction has {} components, images have {channels}",
            path.display(),
            direction.len()
        )));
    }
    // keep an already-unit direction bit-exact so written tables round-trip
    let norm = direction.iter().map(|v| v * v).sum::<f64>().sqrt();
    Ok(if (norm - 1.0).abs() <= 1e-12 {
        DistortionTable::new(direction, file.samples, file.extrapolation)?
    } else {
        DistortionTable::with_unnormalized_direction(direction, file.samples, file.extrapolation)?
    })
}

pub fn format_table(table: &DistortionTable) -> String {
    let e: Vec<String> = table.direction().iter().map(|v| v.to_string()).collect();
    let extrapolation = match table.extrapolation() {
        Extrapolation::ClampEnds => "clamp",
        Extrapolation::LinearEnds => "linear",
    };
    let mut out = format!("# e: {}\n# extrapolation: {extrapolation}\nt,L\n", e.join(" "));
    for (t, l) in table.samples() {
        out.push_str(&format!("{t},{l}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn palette_parsing() {
        let colors = parse_palette("# three colors\n0 0 0\n0.5 0.25 1 # grey-ish\n\n1 1 1\n").unwrap();
        assert_eq!(colors, vec![vec![0.0; 3], vec![0.5, 0.25, 1.0], vec![1.0; 3]]);
        assert!(parse_palette("0 0 0\n1 1\n").is_err());
        assert!(parse_palette("0 0 x\n").is_err());
        assert!(parse_palette("0 0 1.5\n").is_err());
        assert!(parse_palette("# nothing\n").is_err());
        assert!(parse_palette("nan 0 0\n").is_err());
    }

    #[test]
    fn palette_round_trip() {
        let p = Palette::new(vec![vec![0.1, 1.0 / 3.0, 0.7], vec![0.0, 1.0, 0.123456789]]).unwrap();
        assert_eq!(parse_palette(&format_palette(&p)).unwrap(), p.colors());
    }

    #[test]
    fn table_parsing() {
        let f = parse_table("# e: 1 0 0\n# extrapolation: linear\nt,L\n0,0\n0.5, 0.7\n1,1\n").unwrap();
        assert_eq!(f.direction, Some(vec![1.0, 0.0, 0.0]));
        assert_eq!(f.extrapolation, Extrapolation::LinearEnds);
        assert_eq!(f.samples, vec![(0.0, 0.0), (0.5, 0.7), (1.0, 1.0)]);
        let bare = parse_table("0,0\n1,2\n").unwrap();
        assert_eq!(bare.direction, None);
        assert_eq!(bare.extrapolation, Extrapolation::ClampEnds);
        assert!(parse_table("t,L\n").is_err());
        assert!(parse_table("0,0,0\n").is_err());
        assert!(parse_table("0,0\nt,L\n").is_err());
        assert!(parse_table("# extrapolation: cubic\n0,0\n").is_err());
    }

    #[test]
    fn table_round_trip() {
        let t = DistortionTable::with_unnormalized_direction(
            vec![1.0, 2.0, 2.0],
            vec![(-0.25, 0.0), (0.3, 0.1 + 0.2), (1.0, 1.0)],
            Extrapolation::LinearEnds,
        )
        .unwrap();
        let f = parse_table(&format_table(&t)).unwrap();
        let back = DistortionTable::new(f.direction.unwrap(), f.samples, f.extrapolation).unwrap();
        assert_eq!(back, t);
    }
}
