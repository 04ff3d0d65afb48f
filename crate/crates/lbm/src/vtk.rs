//! Legacy ASCII VTK (STRUCTURED_POINTS) snapshots.
//!
//! One field per file: scalar runs write a `SCALARS phi` block, fluid runs
//! a `VECTORS velocity` block. Values are printed with 14 fractional
//! digits in scientific notation, x varying fastest, so output is
//! byte-deterministic across runs. The reader accepts any structured-points
//! file with unit spacing and a single z-slice, holding whichever attribute
//! blocks it finds.

use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use std::fmt::Write as _;
use std::path::Path;

/// Parsed snapshot contents.
#[derive(Debug, Clone, PartialEq)]
pub struct VtkData {
    pub nx: usize,
    pub ny: usize,
    pub scalar: Option<(String, ScalarField)>,
    pub vector: Option<(String, VectorField)>,
}

impl VtkData {
    pub fn field_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        if let Some((n, _)) = &self.scalar {
            names.push(n.clone());
        }
        if let Some((n, _)) = &self.vector {
            names.push(n.clone());
        }
        names
    }
}

fn header(title: &str, nx: usize, ny: usize) -> String {
    let mut s = String::new();
    s.push_str("# vtk DataFile Version 3.0\n");
    s.push_str(title);
    s.push('\n');
    s.push_str("ASCII\n");
    s.push_str("DATASET STRUCTURED_POINTS\n");
    let _ = writeln!(s, "DIMENSIONS {nx} {ny} 1");
    s.push_str("ORIGIN 0 0 0\n");
    s.push_str("SPACING 1 1 1\n");
    let _ = writeln!(s, "POINT_DATA {}", nx * ny);
    s
}

/// Write a scalar snapshot with attribute name `name`.
pub fn write_vtk_scalar(
    path: &Path,
    field: &ScalarField,
    name: &str,
    title: &str,
) -> Result<()> {
    let mut s = header(title, field.nx(), field.ny());
    let _ = writeln!(s, "SCALARS {name} double");
    s.push_str("LOOKUP_TABLE default\n");
    for y in 0..field.ny() {
        for x in 0..field.nx() {
            let _ = writeln!(s, "{:.14e}", field.get(x, y));
        }
    }
    std::fs::write(path, s)?;
    Ok(())
}

/// Write a vector snapshot with attribute name `name` (z component zero).
pub fn write_vtk_vector(
    path: &Path,
    field: &VectorField,
    name: &str,
    title: &str,
) -> Result<()> {
    let mut s = header(title, field.nx(), field.ny());
    let _ = writeln!(s, "VECTORS {name} double");
    for y in 0..field.ny() {
        for x in 0..field.nx() {
            let (vx, vy) = field.get(x, y);
            let _ = writeln!(s, "{vx:.14e} {vy:.14e} 0.0e0");
        }
    }
    std::fs::write(path, s)?;
    Ok(())
}

fn vtk_err(path: &Path, reason: impl Into<String>) -> Error {
    Error::Vtk {
        path: path.display().to_string(),
        reason: reason.into(),
    }
}

/// Read a snapshot back. Accepts scalar and/or vector attribute blocks.
pub fn read_vtk(path: &Path) -> Result<VtkData> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| vtk_err(path, format!("cannot read file: {e}")))?;
    let mut lines = text.lines();

    let magic = lines.next().unwrap_or("");
    if !magic.starts_with("# vtk DataFile") {
        return Err(vtk_err(path, "missing '# vtk DataFile' header"));
    }
    let _title = lines
        .next()
        .ok_or_else(|| vtk_err(path, "truncated header (no title)"))?;
    let format = lines.next().unwrap_or("").trim();
    if format != "ASCII" {
        return Err(vtk_err(path, format!("unsupported format '{format}'")));
    }
    let dataset = lines.next().unwrap_or("").trim();
    if dataset != "DATASET STRUCTURED_POINTS" {
        return Err(vtk_err(path, format!("unsupported dataset '{dataset}'")));
    }

    let mut nx = 0usize;
    let mut ny = 0usize;
    let mut point_data = None;
    // Geometry lines may appear in any order before POINT_DATA.
    for line in lines.by_ref() {
        let mut parts = line.split_whitespace();
        match parts.next() {
            Some("DIMENSIONS") => {
                let dims: Vec<usize> = parts.map(|p| p.parse().unwrap_or(0)).collect();
                if dims.len() != 3 || dims[2] != 1 || dims[0] == 0 || dims[1] == 0 {
                    return Err(vtk_err(path, format!("bad DIMENSIONS line '{line}'")));
                }
                nx = dims[0];
                ny = dims[1];
            }
            Some("ORIGIN") | Some("SPACING") => {}
            Some("POINT_DATA") => {
                let n: usize = parts
                    .next()
                    .and_then(|p| p.parse().ok())
                    .ok_or_else(|| vtk_err(path, "bad POINT_DATA line"))?;
                point_data = Some(n);
                break;
            }
            Some(other) => {
                return Err(vtk_err(path, format!("unexpected header line '{other}'")));
            }
            None => {}
        }
    }
    let n = point_data.ok_or_else(|| vtk_err(path, "missing POINT_DATA"))?;
    if nx == 0 || ny == 0 {
        return Err(vtk_err(path, "missing DIMENSIONS"));
    }
    if n != nx * ny {
        return Err(vtk_err(
            path,
            format!("POINT_DATA {n} does not match {nx}x{ny} grid"),
        ));
    }

    // Remaining content: attribute blocks, values read as a whitespace
    // token stream.
    let mut tokens = lines.flat_map(str::split_whitespace);
    let mut data = VtkData {
        nx,
        ny,
        scalar: None,
        vector: None,
    };
    while let Some(tok) = tokens.next() {
        match tok {
            "SCALARS" => {
                let name = tokens
                    .next()
                    .ok_or_else(|| vtk_err(path, "SCALARS without a name"))?
                    .to_string();
                let _ty = tokens.next();
                // optional component count, then the LOOKUP_TABLE keyword
                let mut next = tokens
                    .next()
                    .ok_or_else(|| vtk_err(path, "truncated SCALARS block"))?;
                if let Ok(comps) = next.parse::<usize>() {
                    if comps != 1 {
                        return Err(vtk_err(
                            path,
                            format!("only 1-component scalars supported, got {comps}"),
                        ));
                    }
                    next = tokens
                        .next()
                        .ok_or_else(|| vtk_err(path, "truncated SCALARS block"))?;
                }
                if next != "LOOKUP_TABLE" {
                    return Err(vtk_err(path, "expected LOOKUP_TABLE after SCALARS"));
                }
                let _table = tokens.next();
                let mut field = ScalarField::new(nx, ny);
                for j in 0..n {
                    let t = tokens
                        .next()
                        .ok_or_else(|| vtk_err(path, format!("scalar data ends at value {j} of {n}")))?;
                    let v: f64 = t
                        .parse()
                        .map_err(|_| vtk_err(path, format!("bad scalar value '{t}'")))?;
                    field.data_mut()[j] = v;
                }
                data.scalar = Some((name, field));
            }
            "VECTORS" => {
                let name = tokens
                    .next()
                    .ok_or_else(|| vtk_err(path, "VECTORS without a name"))?
                    .to_string();
                let _ty = tokens.next();
                let mut field = VectorField::new(nx, ny);
                for j in 0..n {
                    let mut comp = [0.0f64; 3];
                    for c in &mut comp {
                        let t = tokens.next().ok_or_else(|| {
                            vtk_err(path, format!("vector data ends at value {j} of {n}"))
                        })?;
                        *c = t
                            .parse()
                            .map_err(|_| vtk_err(path, format!("bad vector value '{t}'")))?;
                    }
                    let (xs, ys) = field.planes_mut();
                    xs[j] = comp[0];
                    ys[j] = comp[1];
                }
                data.vector = Some((name, field));
            }
            other => {
                return Err(vtk_err(path, format!("unexpected attribute block '{other}'")));
            }
        }
    }
    if data.scalar.is_none() && data.vector.is_none() {
        return Err(vtk_err(path, "file has no attribute data"));
    }
    Ok(data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    #[test]
    fn scalar_round_trip_preserves_values_to_print_precision() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("s.vtk");
        let f = ScalarField::from_fn(7, 5, |x, y| {
            (x as f64 * 0.31).sin() * (y as f64 * 0.17).cos() + 1e-7
        });
        write_vtk_scalar(&path, &f, "phi", "test snapshot").unwrap();
        let back = read_vtk(&path).unwrap();
        let (name, g) = back.scalar.unwrap();
        assert_eq!(name, "phi");
        assert_eq!(back.nx, 7);
        assert_eq!(back.ny, 5);
        // 15 significant digits survive the text round trip
        assert!(f.max_abs_diff(&g) < 1e-14);
    }

    #[test]
    fn short_decimals_round_trip_exactly() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("s.vtk");
        let f = ScalarField::from_fn(4, 4, |x, y| (x as f64) * 0.25 - (y as f64) * 0.5);
        write_vtk_scalar(&path, &f, "phi", "t").unwrap();
        let (_, g) = read_vtk(&path).unwrap().scalar.unwrap();
        assert_eq!(f, g);
    }

    #[test]
    fn vector_round_trip() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("v.vtk");
        let f = VectorField::from_fn(6, 4, |x, y| (x as f64 * 0.01, -(y as f64) * 0.02));
        write_vtk_vector(&path, &f, "velocity", "t").unwrap();
        let back = read_vtk(&path).unwrap();
        let (name, g) = back.vector.unwrap();
        assert_eq!(name, "velocity");
        for y in 0..4 {
            for x in 0..6 {
                let (a, b) = f.get(x, y);
                let (c, d) = g.get(x, y);
                assert_eq!((a, b), (c, d));
            }
        }
    }

    #[test]
    fn writer_is_byte_deterministic() {
        let dir = tempdir().unwrap();
        let p1 = dir.path().join("a.vtk");
        let p2 = dir.path().join("b.vtk");
        let f = ScalarField::from_fn(5, 5, |x, y| ((x * y) as f64).sqrt());
        write_vtk_scalar(&p1, &f, "phi", "same title").unwrap();
        write_vtk_scalar(&p2, &f, "phi", "same title").unwrap();
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
    }

    #[test]
    fn values_are_written_x_fastest() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("o.vtk");
        let f = ScalarField::from_fn(3, 2, |x, y| (y * 3 + x) as f64);
        write_vtk_scalar(&path, &f, "phi", "t").unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let values: Vec<f64> = text
            .lines()
            .skip_while(|l| !l.starts_with("LOOKUP_TABLE"))
            .skip(1)
            .map(|l| l.parse().unwrap())
            .collect();
        assert_eq!(values, vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0]);
    }

    #[test]
    fn corrupt_files_give_descriptive_errors() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("bad.vtk");

        std::fs::write(&path, "not a vtk file\n").unwrap();
        assert!(matches!(read_vtk(&path), Err(Error::Vtk { .. })));

        std::fs::write(
            &path,
            "# vtk DataFile Version 3.0\nt\nASCII\nDATASET STRUCTURED_POINTS\nDIMENSIONS 3 3 1\nORIGIN 0 0 0\nSPACING 1 1 1\nPOINT_DATA 9\nSCALARS phi double\nLOOKUP_TABLE default\n1.0 2.0 3.0\n",
        )
        .unwrap();
        match read_vtk(&path) {
            Err(Error::Vtk { reason, .. }) => {
                assert!(reason.contains("ends at value"), "{reason}")
            }
            other => panic!("expected truncation error, got {other:?}"),
        }

        std::fs::write(
            &path,
            "# vtk DataFile Version 3.0\nt\nASCII\nDATASET STRUCTURED_POINTS\nDIMENSIONS 3 3 1\nORIGIN 0 0 0\nSPACING 1 1 1\nPOINT_DATA 5\n",
        )
        .unwrap();
        match read_vtk(&path) {
            Err(Error::Vtk { reason, .. }) => assert!(reason.contains("does not match"), "{reason}"),
            other => panic!("expected shape error, got {other:?}"),
        }
    }

    #[test]
    fn reader_accepts_plus_style_exponents() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("ext.vtk");
        std::fs::write(
            &path,
            "# vtk DataFile Version 3.0\nexternal tool\nASCII\nDATASET STRUCTURED_POINTS\nDIMENSIONS 2 2 1\nORIGIN 0 0 0\nSPACING 1 1 1\nPOINT_DATA 4\nSCALARS phi float 1\nLOOKUP_TABLE default\n1.0e+00\n2.5e-01\n-3.0E+01\n4\n",
        )
        .unwrap();
        let (_, f) = read_vtk(&path).unwrap().scalar.unwrap();
        assert_eq!(f.get(0, 0), 1.0);
        assert_eq!(f.get(1, 0), 0.25);
        assert_eq!(f.get(0, 1), -30.0);
        assert_eq!(f.get(1, 1), 4.0);
    }
}
