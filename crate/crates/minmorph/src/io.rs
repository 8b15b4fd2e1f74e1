//! Text formats.
//!
//! * Loops: `LOOP2D <count>` then one `<x> <y>` line per vertex; the loop
//!   closes implicitly.
//! * Meshes: OFF, `OFF`, then `<vertices> <faces> <edges>`, vertex lines
//!   `<x> <y> <z>`, face lines `3 <i> <j> <k>`.
//! * Morphs: JSON with `dimension` (1 or 2), `times`, `frames` (one array of
//!   points per time, points with `dimension + 1` coordinates) and `faces`
//!   (present exactly when `dimension` is 2).
//!
//! In the two line formats blank lines and `#` comments are skipped. Floats
//! are written with 17 significant digits, so files round-trip exactly.
//! The path `-` means standard input or standard output.

use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use minmorph_core::{Dim, DiscreteManifold, Morph, Point};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Formats a float with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn display(path: &Path) -> String {
    if is_stdio(path) {
        "<stdin>".into()
    } else {
        path.display().to_string()
    }
}

fn is_stdio(path: &Path) -> bool {
    path.as_os_str() == "-"
}

/// Whole contents of `path`, or of standard input for `-`.
pub fn read_text(path: &Path) -> Result<String, CliError> {
    let io_err = |source| CliError::Io { path: display(path), source };
    if is_stdio(path) {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s).map_err(io_err)?;
        Ok(s)
    } else {
        fs::read_to_string(path).map_err(io_err)
    }
}

/// Writes `text` to `path` (standard output for `None` or `-`).
///
/// Files are written to a temporary sibling first and renamed into place,
/// so a failure never leaves a partial file behind.
pub fn write_output(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    let Some(path) = path.filter(|p| !is_stdio(p)) else {
        let mut out = io::stdout().lock();
        return out
            .write_all(text.as_bytes())
            .and_then(|_| out.flush())
            .map_err(|source| CliError::Io { path: "<stdout>".into(), source });
    };
    let io_err = |source| CliError::Io { path: path.display().to_string(), source };
    let name = path.file_name().ok_or_else(|| CliError::Config(format!("{} is not a file path", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(format!(".{}.tmp", std::process::id()));
    let tmp: PathBuf = path.with_file_name(tmp_name);
    let written = fs::write(&tmp, text).and_then(|_| fs::rename(&tmp, path));
    if let Err(e) = written {
        let _ = fs::remove_file(&tmp);
        return Err(io_err(e));
    }
    Ok(())
}

/// Non-blank, non-comment lines with their 1-based line numbers.
struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    origin: String,
    last: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str, origin: String) -> Self {
        Self { inner: text.lines().enumerate(), origin, last: 0 }
    }

    fn error(&self, line: usize, message: impl Into<String>) -> CliError {
        CliError::Parse { path: self.origin.clone(), line, message: message.into() }
    }

    /// Next content line as tokens, or an error naming what was expected.
    fn next_tokens(&mut self, expected: &str) -> Result<(usize, Vec<&'a str>), CliError> {
        for (i, raw) in self.inner.by_ref() {
            let content = raw.split('#').next().unwrap_or("").trim();
            self.last = i + 1;
            if !content.is_empty() {
                return Ok((i + 1, content.split_whitespace().collect()));
            }
        }
        Err(self.error(self.last + 1, format!("unexpected end of file, expected {expected}")))
    }

    fn expect_end(&mut self) -> Result<(), CliError> {
        for (i, raw) in self.inner.by_ref() {
            if !raw.split('#').next().unwrap_or("").trim().is_empty() {
                return Err(CliError::Parse {
                    path: self.origin.clone(),
                    line: i + 1,
                    message: "unexpected content after the last record".into(),
                });
            }
        }
        Ok(())
    }

    fn float(&self, line: usize, token: &str) -> Result<f64, CliError> {
        match token.parse::<f64>() {
            Ok(x) if x.is_finite() => Ok(x),
            _ => Err(self.error(line, format!("expected a finite number, found `{token}`"))),
        }
    }

    fn count(&self, line: usize, token: &str) -> Result<usize, CliError> {
        token
            .parse::<usize>()
            .map_err(|_| self.error(line, format!("expected a nonnegative integer, found `{token}`")))
    }

    fn arity(&self, line: usize, tokens: &[&str], n: usize, what: &str) -> Result<(), CliError> {
        if tokens.len() != n {
            return Err(self.error(line, format!("expected {what}, found {} fields", tokens.len())));
        }
        Ok(())
    }
}

fn validated(m: DiscreteManifold, origin: &str) -> Result<DiscreteManifold, CliError> {
    m.checked().map_err(CliError::core(origin))
}

/// Parses a `LOOP2D` document. Does not validate the geometry.
pub fn parse_curve(text: &str, origin: &str) -> Result<DiscreteManifold, CliError> {
    let mut lines = Lines::new(text, origin.into());
    let (line, header) = lines.next_tokens("a `LOOP2D <count>` header")?;
    if header.first() != Some(&"LOOP2D") || header.len() != 2 {
        return Err(lines.error(line, "expected a `LOOP2D <count>` header"));
    }
    let n = lines.count(line, header[1])?;
    let mut pts = Vec::with_capacity(n);
    for _ in 0..n {
        let (line, t) = lines.next_tokens("a vertex line `<x> <y>`")?;
        lines.arity(line, &t, 2, "a vertex line `<x> <y>`")?;
        pts.push([lines.float(line, t[0])?, lines.float(line, t[1])?]);
    }
    lines.expect_end()?;
    DiscreteManifold::curve(pts).map_err(|e| lines.error(line, e.to_string()))
}

/// Parses an OFF document with triangle faces. Does not validate the
/// geometry.
pub fn parse_off(text: &str, origin: &str) -> Result<DiscreteManifold, CliError> {
    let mut lines = Lines::new(text, origin.into());
    let (line, header) = lines.next_tokens("an `OFF` header")?;
    if header.first() != Some(&"OFF") {
        return Err(lines.error(line, "expected an `OFF` header"));
    }
    // The counts may share the header line.
    let (line, counts) = if header.len() > 1 {
        (line, header[1..].to_vec())
    } else {
        lines.next_tokens("a counts line `<vertices> <faces> <edges>`")?
    };
    lines.arity(line, &counts, 3, "a counts line `<vertices> <faces> <edges>`")?;
    let nv = lines.count(line, counts[0])?;
    let nf = lines.count(line, counts[1])?;
    lines.count(line, counts[2])?;
    let mut vertices: Vec<Point> = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (line, t) = lines.next_tokens("a vertex line `<x> <y> <z>`")?;
        lines.arity(line, &t, 3, "a vertex line `<x> <y> <z>`")?;
        vertices.push([lines.float(line, t[0])?, lines.float(line, t[1])?, lines.float(line, t[2])?]);
    }
    let mut faces = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (line, t) = lines.next_tokens("a face line `3 <i> <j> <k>`")?;
        if t.first() != Some(&"3") {
            return Err(lines.error(line, "only triangle faces `3 <i> <j> <k>` are supported"));
        }
        lines.arity(line, &t, 4, "a face line `3 <i> <j> <k>`")?;
        let mut face = [0usize; 3];
        for (slot, token) in face.iter_mut().zip(&t[1..]) {
            *slot = lines.count(line, token)?;
            if *slot >= nv {
                return Err(lines.error(line, format!("vertex index {slot} out of range (0..{nv})")));
            }
        }
        faces.push(face);
    }
    lines.expect_end()?;
    DiscreteManifold::surface(vertices, faces).map_err(|e| lines.error(line, e.to_string()))
}

/// Parses a loop or a mesh, telling them apart by the header.
pub fn parse_manifold(text: &str, origin: &str) -> Result<DiscreteManifold, CliError> {
    let first = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .find(|l| !l.is_empty())
        .and_then(|l| l.split_whitespace().next());
    match first {
        Some("LOOP2D") => parse_curve(text, origin),
        Some("OFF") => parse_off(text, origin),
        _ => {
            let line = text.lines().position(|l| !l.split('#').next().unwrap_or("").trim().is_empty());
            Err(CliError::Parse {
                path: origin.into(),
                line: line.map_or(1, |i| i + 1),
                message: "expected a `LOOP2D` or `OFF` header".into(),
            })
        }
    }
}

pub fn format_curve(m: &DiscreteManifold) -> String {
    let mut s = format!("LOOP2D {}\n", m.num_vertices());
    for p in m.vertices() {
        s.push_str(&format!("{} {}\n", fmt_f64(p[0]), fmt_f64(p[1])));
    }
    s
}

pub fn format_off(m: &DiscreteManifold) -> String {
    let faces = m.faces().unwrap_or(&[]);
    let mut s = format!("OFF\n{} {} 0\n", m.num_vertices(), faces.len());
    for p in m.vertices() {
        s.push_str(&format!("{} {} {}\n", fmt_f64(p[0]), fmt_f64(p[1]), fmt_f64(p[2])));
    }
    for [a, b, c] in faces {
        s.push_str(&format!("3 {a} {b} {c}\n"));
    }
    s
}

/// `LOOP2D` for loops, OFF for meshes.
pub fn format_manifold(m: &DiscreteManifold) -> String {
    match m.dim() {
        Dim::Curve => format_curve(m),
        Dim::Surface => format_off(m),
    }
}

pub fn load_curve(path: &Path) -> Result<DiscreteManifold, CliError> {
    let origin = display(path);
    validated(parse_curve(&read_text(path)?, &origin)?, &origin)
}

pub fn load_mesh(path: &Path) -> Result<DiscreteManifold, CliError> {
    let origin = display(path);
    validated(parse_off(&read_text(path)?, &origin)?, &origin)
}

/// Loads and validates a loop or a mesh.
pub fn load_manifold(path: &Path) -> Result<DiscreteManifold, CliError> {
    let origin = display(path);
    validated(parse_manifold(&read_text(path)?, &origin)?, &origin)
}

pub fn save_curve(path: &Path, m: &DiscreteManifold) -> Result<(), CliError> {
    write_output(Some(path), &format_curve(m))
}

pub fn save_mesh(path: &Path, m: &DiscreteManifold) -> Result<(), CliError> {
    write_output(Some(path), &format_off(m))
}

pub fn save_manifold(path: &Path, m: &DiscreteManifold) -> Result<(), CliError> {
    write_output(Some(path), &format_manifold(m))
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MorphDoc {
    dimension: u8,
    times: Vec<f64>,
    frames: Vec<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    faces: Option<Vec<[usize; 3]>>,
}

/// Parses and validates a morph document.
pub fn parse_morph(text: &str, origin: &str) -> Result<Morph, CliError> {
    let doc: MorphDoc = serde_json::from_str(text).map_err(|e| CliError::Parse {
        path: origin.into(),
        line: e.line(),
        message: format!("{e}"),
    })?;
    let invalid = |msg: String| CliError::Parse { path: origin.into(), line: 1, message: msg };
    let width = match (doc.dimension, &doc.faces) {
        (1, None) => 2,
        (2, Some(_)) => 3,
        (1, Some(_)) => return Err(invalid("`faces` must be absent when `dimension` is 1".into())),
        (2, None) => return Err(invalid("`faces` is required when `dimension` is 2".into())),
        (d, _) => return Err(invalid(format!("`dimension` must be 1 or 2, found {d}"))),
    };
    let mut frames: Vec<Vec<Point>> = Vec::with_capacity(doc.frames.len());
    for (k, frame) in doc.frames.iter().enumerate() {
        let mut pts = Vec::with_capacity(frame.len());
        for (i, p) in frame.iter().enumerate() {
            if p.len() != width {
                return Err(invalid(format!("frames[{k}][{i}] has {} coordinates, expected {width}", p.len())));
            }
            if p.iter().any(|x| !x.is_finite()) {
                return Err(invalid(format!("frames[{k}][{i}] is not finite")));
            }
            pts.push([p[0], p[1], if width == 3 { p[2] } else { 0.0 }]);
        }
        frames.push(pts);
    }
    let Some(first) = frames.first() else {
        return Err(invalid("`frames` is empty".into()));
    };
    let source = match doc.faces {
        None => DiscreteManifold::curve(first.iter().map(|p| [p[0], p[1]])),
        Some(faces) => DiscreteManifold::surface(first.clone(), faces),
    }
    .map_err(CliError::core(origin))?;
    Morph::new(source, doc.times, frames).map_err(CliError::core(origin))
}

pub fn format_morph(morph: &Morph) -> String {
    let dim = morph.dim();
    let width = dim.n() + 1;
    let doc = MorphDoc {
        dimension: dim.n() as u8,
        times: morph.times().to_vec(),
        frames: morph.frames().iter().map(|f| f.iter().map(|p| p[..width].to_vec()).collect()).collect(),
        faces: morph.source().faces().map(<[_]>::to_vec),
    };
    let mut s = serde_json::to_string(&doc).expect("finite floats serialize");
    s.push('\n');
    s
}

pub fn load_morph(path: &Path) -> Result<Morph, CliError> {
    parse_morph(&read_text(path)?, &display(path))
}

pub fn save_morph(path: &Path, morph: &Morph) -> Result<(), CliError> {
    write_output(Some(path), &format_morph(morph))
}
