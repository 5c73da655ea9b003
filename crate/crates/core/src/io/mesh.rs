//! ASCII OFF and OBJ triangle meshes (vertices and faces only).
//!
//! Polygonal faces are fan-triangulated. OBJ face tokens like `3/1/2` use
//! the vertex index only; negative indices are relative to the end.

use std::path::Path;

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    pub vertices: Vec<[f64; 3]>,
    pub triangles: Vec<[usize; 3]>,
}

impl TriangleMesh {
    pub fn load(path: &Path) -> Result<Self> {
        let text = super::read_to_string(path)?;
        match path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase())
            .as_deref()
        {
            Some("off") => parse_off(&text),
            Some("obj") => parse_obj(&text),
            other => Err(Error::invalid(format!("unsupported mesh extension {other:?}"))),
        }
    }

    pub fn to_off(&self) -> String {
        let mut out = format!("OFF\n{} {} 0\n", self.vertices.len(), self.triangles.len());
        for v in &self.vertices {
            out.push_str(&format!("{} {} {}\n", v[0], v[1], v[2]));
        }
        for t in &self.triangles {
            out.push_str(&format!("3 {} {} {}\n", t[0], t[1], t[2]));
        }
        out
    }

    fn validate(self) -> Result<Self> {
        let n = self.vertices.len();
        if let Some(t) = self.triangles.iter().find(|t| t.iter().any(|&i| i >= n)) {
            return Err(Error::format("mesh", format!("face {t:?} references a missing vertex")));
        }
        Ok(self)
    }
}

fn fan(face: &[usize], out: &mut Vec<[usize; 3]>) {
    for k in 1..face.len().saturating_sub(1) {
        out.push([face[0], face[k], face[k + 1]]);
    }
}

fn num<T: std::str::FromStr>(tok: Option<&str>, what: &str) -> Result<T> {
    tok.and_then(|t| t.parse().ok())
        .ok_or_else(|| Error::format("mesh", format!("bad or missing {what}")))
}

pub fn parse_off(text: &str) -> Result<TriangleMesh> {
    let mut tokens = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or(""))
        .flat_map(str::split_whitespace);
    let magic = tokens.next();
    if magic != Some("OFF") {
        return Err(Error::format("mesh", "missing OFF magic"));
    }
    let nv: usize = num(tokens.next(), "vertex count")?;
    let nf: usize = num(tokens.next(), "face count")?;
    let _edges: usize = num(tokens.next(), "edge count")?;
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        vertices.push([
            num(tokens.next(), "coordinate")?,
            num(tokens.next(), "coordinate")?,
            num(tokens.next(), "coordinate")?,
        ]);
    }
    let mut triangles = Vec::with_capacity(nf);
    for _ in 0..nf {
        let k: usize = num(tokens.next(), "face arity")?;
        let face = (0..k)
            .map(|_| num(tokens.next(), "face index"))
            .collect::<Result<Vec<usize>>>()?;
        fan(&face, &mut triangles);
    }
    TriangleMesh { vertices, triangles }.validate()
}

pub fn parse_obj(text: &str) -> Result<TriangleMesh> {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for line in text.lines() {
        let mut tok = line.split('#').next().unwrap_or("").split_whitespace();
        match tok.next() {
            Some("v") => vertices.push([
                num(tok.next(), "coordinate")?,
                num(tok.next(), "coordinate")?,
                num(tok.next(), "coordinate")?,
            ]),
            Some("f") => {
                let face = tok
                    .map(|t| {
                        let idx: i64 = num(t.split('/').next(), "face index")?;
                        let resolved = if idx < 0 { vertices.len() as i64 + idx } else { idx - 1 };
                        usize::try_from(resolved)
                            .map_err(|_| Error::format("mesh", format!("face index {idx} out of range")))
                    })
                    .collect::<Result<Vec<usize>>>()?;
                fan(&face, &mut triangles);
            }
            _ => {}
        }
    }
    TriangleMesh { vertices, triangles }.validate()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn off_quad_is_fanned() {
        let m = parse_off("OFF\n4 1 0\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n4 0 1 2 3\n").unwrap();
        assert_eq!(m.triangles, vec![[0, 1, 2], [0, 2, 3]]);
        assert_eq!(parse_off(&m.to_off()).unwrap(), m);
    }

    #[test]
    fn obj_slashes_and_negative_indices() {
        let m = parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nvn 0 0 1\nf 1/1/1 2//1 -1\n").unwrap();
        assert_eq!(m.triangles, vec![[0, 1, 2]]);
    }

    #[test]
    fn rejects_out_of_range_faces() {
        assert!(parse_off("OFF\n1 1 0\n0 0 0\n3 0 1 2\n").is_err());
        assert!(parse_obj("v 0 0 0\nf 1 2 3\n").is_err());
        assert!(parse_off("PLY\n").is_err());
    }
}
