//! Parsing of vector-valued flags: inputs, baselines and paths.

use std::path::Path;

use attrib_core::attribution::{BaselineSpec, PathSpec};
use attrib_core::render::read_pgm;
use attrib_core::{Error, Result, Tensor64};

/// Parses one comma-separated row of decimals.
pub fn parse_row(text: &str) -> Result<Vec<f64>> {
    text.trim()
        .split(',')
        .map(|field| {
            let field = field.trim();
            field
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("'{field}' is not a number")))
        })
        .collect()
}

/// Reads `spec` as a file when it names one, otherwise as a literal row.
///
/// Files starting with the `P5` magic are binary PGM images, flattened
/// row-major and scaled to `[0, 1]`; any other file must hold exactly one
/// CSV row.
pub fn parse_vector(spec: &str) -> Result<Vec<f64>> {
    let path = Path::new(spec);
    if !path.is_file() {
        return parse_row(spec);
    }
    let bytes = std::fs::read(path)
        .map_err(|e| Error::InvalidParameter(format!("cannot read {spec}: {e}")))?;
    if bytes.starts_with(b"P5") {
        let (img, maxval) = read_pgm(&bytes)?;
        return Ok(img.to_unit_values(maxval));
    }
    let text = String::from_utf8(bytes).map_err(|_| Error::Parse(format!("{spec} is not UTF-8")))?;
    let rows: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
    match rows[..] {
        [row] => parse_row(row),
        _ => Err(Error::Parse(format!("{spec} must hold exactly one CSV row, found {}", rows.len()))),
    }
}

pub fn parse_input(spec: &str) -> Result<Tensor64> {
    Tensor64::vector(parse_vector(spec)?)
}

/// `zeros`, `constant:<v>`, a literal row, or a file.
pub fn parse_baseline(spec: &str) -> Result<BaselineSpec<f64>> {
    if spec == "zeros" {
        return Ok(BaselineSpec::Zeros);
    }
    if let Some(v) = spec.strip_prefix("constant:") {
        let v = v
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("'{v}' is not a number")))?;
        return Ok(BaselineSpec::Constant(v));
    }
    Ok(BaselineSpec::Explicit(parse_input(spec)?))
}

/// `straight`, `axis:<i,j,...>`, waypoints separated by `;`, or a file with
/// one waypoint per line.
pub fn parse_path(spec: &str) -> Result<PathSpec<f64>> {
    if spec == "straight" || spec == "straightline" {
        return Ok(PathSpec::Straightline);
    }
    if let Some(order) = spec.strip_prefix("axis:") {
        let order = order
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::Parse(format!("'{s}' is not a feature index")))
            })
            .collect::<Result<_>>()?;
        return Ok(PathSpec::AxisSequential(order));
    }
    let text = if Path::new(spec).is_file() {
        std::fs::read_to_string(spec)
            .map_err(|e| Error::InvalidParameter(format!("cannot read {spec}: {e}")))?
    } else {
        spec.replace(';', "\n")
    };
    let waypoints = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| Tensor64::vector(parse_row(l)?))
        .collect::<Result<Vec<_>>>()?;
    if waypoints.is_empty() {
        return Err(Error::Parse("path has no waypoints".into()));
    }
    Ok(PathSpec::Polyline(waypoints))
}
