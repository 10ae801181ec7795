//! OFF and OBJ import/export.
//!
//! OFF is the canonical format. Coordinates are written with Rust's shortest
//! round-trip float formatting, so save followed by load is exact.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{TriMesh, Vec3};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    Off,
    Obj,
}

impl MeshFormat {
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "off" => Some(MeshFormat::Off),
            "obj" => Some(MeshFormat::Obj),
            _ => None,
        }
    }
}

pub fn load_mesh(path: impl AsRef<Path>, format: MeshFormat) -> Result<TriMesh> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })?;
    let (vertices, faces) = match format {
        MeshFormat::Off => parse_off(&text)?,
        MeshFormat::Obj => parse_obj(&text)?,
    };
    TriMesh::new(vertices, faces)
}

pub fn save_mesh(mesh: &TriMesh, path: impl AsRef<Path>, format: MeshFormat) -> Result<()> {
    let path = path.as_ref();
    let text = match format {
        MeshFormat::Off => write_off(mesh),
        MeshFormat::Obj => write_obj(mesh),
    };
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })
}

pub fn write_off(mesh: &TriMesh) -> String {
    let mut s = String::with_capacity(64 * (mesh.num_vertices() + mesh.num_faces()));
    s.push_str("OFF\n");
    let _ = writeln!(s, "{} {} 0", mesh.num_vertices(), mesh.num_faces());
    for p in mesh.vertices() {
        let _ = writeln!(s, "{} {} {}", p.x, p.y, p.z);
    }
    for f in mesh.faces() {
        let _ = writeln!(s, "3 {} {} {}", f[0], f[1], f[2]);
    }
    s
}

pub fn write_obj(mesh: &TriMesh) -> String {
    let mut s = String::new();
    for p in mesh.vertices() {
        let _ = writeln!(s, "v {} {} {}", p.x, p.y, p.z);
    }
    for f in mesh.faces() {
        let _ = writeln!(s, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
    }
    s
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

fn parse_num<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    tok.ok_or_else(|| parse_err(line, format!("missing {what}")))?
        .parse()
        .map_err(|_| parse_err(line, format!("bad {what}")))
}

type Parsed = (Vec<Vec3>, Vec<[usize; 3]>);

pub fn parse_off(text: &str) -> Result<Parsed> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let (n, header) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let mut toks = header.split_whitespace();
    if toks.next() != Some("OFF") {
        return Err(parse_err(n, "expected OFF header"));
    }
    // counts may follow the keyword on the same line
    let rest: Vec<&str> = toks.collect();
    let (n, counts) = if rest.is_empty() {
        let (n, l) = lines.next().ok_or_else(|| parse_err(n, "missing counts"))?;
        (n, l.split_whitespace().collect::<Vec<_>>())
    } else {
        (n, rest)
    };
    let mut c = counts.into_iter();
    let nv: usize = parse_num(c.next(), n, "vertex count")?;
    let nf: usize = parse_num(c.next(), n, "face count")?;

    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (n, l) = lines.next().ok_or_else(|| parse_err(n, "truncated vertex list"))?;
        let mut t = l.split_whitespace();
        let x = parse_num(t.next(), n, "x")?;
        let y = parse_num(t.next(), n, "y")?;
        let z = parse_num(t.next(), n, "z")?;
        vertices.push(Vec3::new(x, y, z));
    }
    let mut faces = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (n, l) = lines.next().ok_or_else(|| parse_err(n, "truncated face list"))?;
        let mut t = l.split_whitespace();
        let k: usize = parse_num(t.next(), n, "face size")?;
        if k != 3 {
            return Err(parse_err(n, format!("only triangles are supported, got {k}-gon")));
        }
        faces.push([
            parse_num(t.next(), n, "index")?,
            parse_num(t.next(), n, "index")?,
            parse_num(t.next(), n, "index")?,
        ]);
    }
    Ok((vertices, faces))
}

/// Reads `v` and `f` records; everything else is ignored. Face entries may
/// carry `/vt/vn` suffixes, which are dropped.
pub fn parse_obj(text: &str) -> Result<Parsed> {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let n = i + 1;
        let mut t = line.split_whitespace();
        match t.next() {
            Some("v") => {
                let x = parse_num(t.next(), n, "x")?;
                let y = parse_num(t.next(), n, "y")?;
                let z = parse_num(t.next(), n, "z")?;
                vertices.push(Vec3::new(x, y, z));
            }
            Some("f") => {
                let idx: Vec<usize> = t
                    .map(|tok| {
                        let i: usize = parse_num(tok.split('/').next(), n, "index")?;
                        i.checked_sub(1).ok_or_else(|| parse_err(n, "OBJ indices are 1-based"))
                    })
                    .collect::<Result<_>>()?;
                if idx.len() != 3 {
                    return Err(parse_err(n, "only triangles are supported"));
                }
                faces.push([idx[0], idx[1], idx[2]]);
            }
            _ => {}
        }
    }
    Ok((vertices, faces))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{icosahedron, tetrahedron, uniform_refine};

    #[test]
    fn parses_tetrahedron_off() {
        let text = "OFF\n# regular tetrahedron\n4 4 0\n1 1 1\n1 -1 -1\n-1 1 -1\n-1 -1 1\n\
                    3 0 1 2\n3 0 3 1\n3 0 2 3\n3 1 3 2\n";
        let (v, f) = parse_off(text).unwrap();
        let m = TriMesh::new(v, f).unwrap();
        assert_eq!((m.num_vertices(), m.num_edges(), m.num_faces()), (4, 6, 4));
        assert_eq!(m.euler_characteristic(), 2);
    }

    #[test]
    fn non_manifold_off_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.off");
        // edge (0,1) carries three faces
        std::fs::write(
            &path,
            "OFF\n5 3 0\n0 0 0\n1 0 0\n0 1 0\n0 -1 0\n0 0 1\n3 0 1 2\n3 1 0 3\n3 4 0 1\n",
        )
        .unwrap();
        match load_mesh(&path, MeshFormat::Off) {
            Err(Error::NonManifoldEdge(0, 1, 3)) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn icosahedron_round_trips_bit_identically() {
        // reference written by hand in the canonical layout
        let phi: f64 = 0.5 * (1.0 + 5f64.sqrt());
        let r = (1.0 + phi * phi).sqrt();
        let (a, b) = (1.0 / r, phi / r);
        let pts = [
            (-a, b, 0.0), (a, b, 0.0), (-a, -b, 0.0), (a, -b, 0.0),
            (0.0, -a, b), (0.0, a, b), (0.0, -a, -b), (0.0, a, -b),
            (b, 0.0, -a), (b, 0.0, a), (-b, 0.0, -a), (-b, 0.0, a),
        ];
        let mut reference = String::from("OFF\n12 20 0\n");
        for (x, y, z) in pts {
            reference += &format!("{x} {y} {z}\n");
        }
        for f in icosahedron().faces() {
            reference += &format!("3 {} {} {}\n", f[0], f[1], f[2]);
        }
        let dir = tempfile::tempdir().unwrap();
        let src = dir.path().join("ico.off");
        let dst = dir.path().join("ico2.off");
        std::fs::write(&src, &reference).unwrap();
        let m = load_mesh(&src, MeshFormat::Off).unwrap();
        save_mesh(&m, &dst, MeshFormat::Off).unwrap();
        assert_eq!(std::fs::read_to_string(&dst).unwrap(), reference);
    }

    #[test]
    fn save_load_identity_both_formats() {
        let m = uniform_refine(&uniform_refine(&icosahedron()).unwrap()).unwrap();
        assert_eq!(m.num_vertices(), 162);
        let dir = tempfile::tempdir().unwrap();
        for fmt in [MeshFormat::Off, MeshFormat::Obj] {
            let p = dir.path().join(if fmt == MeshFormat::Off { "m.off" } else { "m.obj" });
            save_mesh(&m, &p, fmt).unwrap();
            let back = load_mesh(&p, fmt).unwrap();
            assert_eq!(back.vertices(), m.vertices());
            assert_eq!(back.faces(), m.faces());
        }
        let t = tetrahedron();
        let p = dir.path().join("t.off");
        save_mesh(&t, &p, MeshFormat::Off).unwrap();
        assert_eq!(load_mesh(&p, MeshFormat::Off).unwrap(), t);
    }

    #[test]
    fn empty_path_is_io_error() {
        assert!(matches!(
            save_mesh(&tetrahedron(), "", MeshFormat::Off),
            Err(Error::Io { .. })
        ));
    }
}
