use std::path::Path;

use crate::error::{Error, Result};

/// One `x y z` triple per line; `#` starts a comment; blank lines skipped.
pub fn parse(text: &str, path: &Path) -> Result<Vec<[f64; 3]>> {
    let mut points = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut it = line.split_whitespace().map(str::parse::<f64>);
        let mut next = || -> Result<f64> {
            match it.next() {
                Some(Ok(v)) => Ok(v),
                _ => Err(Error::format(
                    path,
                    format!("line {}: expected three numbers", lineno + 1),
                )),
            }
        };
        points.push([next()?, next()?, next()?]);
    }
    Ok(points)
}

pub fn read(path: &Path) -> Result<Vec<[f64; 3]>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse(&text, path)
}

pub fn write(path: &Path, points: &[[f64; 3]]) -> Result<()> {
    let mut s = String::with_capacity(points.len() * 40);
    for p in points {
        s.push_str(&format!("{} {} {}\n", p[0], p[1], p[2]));
    }
    std::fs::write(path, s).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comments_and_blank_lines() {
        let p = parse("# header\n1 2 3\n\n 4.5\t5 6 # trailing\n", Path::new("x")).unwrap();
        assert_eq!(p, vec![[1.0, 2.0, 3.0], [4.5, 5.0, 6.0]]);
    }

    #[test]
    fn short_line_is_an_error() {
        let err = parse("1 2\n", Path::new("pts.xyz")).unwrap_err();
        assert!(err.to_string().contains("line 1"));
    }
}
