//! Plain-text mesh exchange format.
//!
//! Header line `dim n_vertices n_cells n_boundary_facets`, then the vertex
//! coordinate lines, the cell vertex-index lines and the boundary facet
//! lines, whitespace separated, zero-based indices, coordinates with enough
//! digits to round-trip f64 exactly. Refinement bookkeeping (level, parents)
//! is not part of the format; an imported mesh is a level-0 mesh.

use super::SimplicialMesh;
use crate::error::FemError;
use std::io::{BufRead, Write};

impl SimplicialMesh {
    pub fn write_text<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(
            w,
            "{} {} {} {}",
            self.dim,
            self.n_vertices(),
            self.n_cells(),
            self.n_boundary_facets()
        )?;
        for v in 0..self.n_vertices() {
            let p = self.vertex(v);
            for (d, x) in p.iter().enumerate() {
                if d > 0 {
                    write!(w, " ")?;
                }
                write!(w, "{x:.17e}")?;
            }
            writeln!(w)?;
        }
        for c in 0..self.n_cells() {
            let line: Vec<String> = self.cell(c).iter().map(|v| v.to_string()).collect();
            writeln!(w, "{}", line.join(" "))?;
        }
        for f in 0..self.n_boundary_facets() {
            let line: Vec<String> =
                self.boundary_facet(f).iter().map(|v| v.to_string()).collect();
            writeln!(w, "{}", line.join(" "))?;
        }
        Ok(())
    }
}

/// Reads a mesh written by [`SimplicialMesh::write_text`]. The boundary
/// facets in the file are checked against the facet census of the cells.
pub fn read_mesh<R: BufRead>(r: &mut R) -> Result<SimplicialMesh, FemError> {
    let mut lines = r.lines().enumerate();
    let mut next_line = |expect: &str| -> Result<(usize, String), FemError> {
        for (no, line) in lines.by_ref() {
            let line = line?;
            if !line.trim().is_empty() {
                return Ok((no + 1, line));
            }
        }
        Err(FemError::MeshFormat { line: 0, message: format!("missing {expect}") })
    };

    let (hno, header) = next_line("header")?;
    let head: Vec<usize> = header
        .split_whitespace()
        .map(|t| {
            t.parse::<usize>().map_err(|e| FemError::MeshFormat {
                line: hno,
                message: format!("bad header token '{t}': {e}"),
            })
        })
        .collect::<Result<_, _>>()?;
    if head.len() != 4 {
        return Err(FemError::MeshFormat {
            line: hno,
            message: "header must be 'dim n_vertices n_cells n_boundary_facets'".into(),
        });
    }
    let (dim, nv, nc, nb) = (head[0], head[1], head[2], head[3]);
    if dim != 2 && dim != 3 {
        return Err(FemError::MeshFormat { line: hno, message: format!("bad dimension {dim}") });
    }

    let mut coords = Vec::with_capacity(nv * dim);
    for _ in 0..nv {
        let (no, line) = next_line("vertex line")?;
        let vals: Vec<f64> = line
            .split_whitespace()
            .map(|t| {
                t.parse::<f64>().map_err(|e| FemError::MeshFormat {
                    line: no,
                    message: format!("bad coordinate '{t}': {e}"),
                })
            })
            .collect::<Result<_, _>>()?;
        if vals.len() != dim {
            return Err(FemError::MeshFormat {
                line: no,
                message: format!("expected {dim} coordinates, found {}", vals.len()),
            });
        }
        coords.extend_from_slice(&vals);
    }

    let mut read_indices = |count: usize, width: usize, what: &str| -> Result<Vec<u32>, FemError> {
        let mut out = Vec::with_capacity(count * width);
        for _ in 0..count {
            let (no, line) = next_line(what)?;
            let vals: Vec<u32> = line
                .split_whitespace()
                .map(|t| {
                    t.parse::<u32>().map_err(|e| FemError::MeshFormat {
                        line: no,
                        message: format!("bad index '{t}': {e}"),
                    })
                })
                .collect::<Result<_, _>>()?;
            if vals.len() != width {
                return Err(FemError::MeshFormat {
                    line: no,
                    message: format!("expected {width} indices, found {}", vals.len()),
                });
            }
            if let Some(&v) = vals.iter().find(|&&v| v as usize >= nv) {
                return Err(FemError::MeshFormat {
                    line: no,
                    message: format!("vertex index {v} out of range (n_vertices = {nv})"),
                });
            }
            out.extend_from_slice(&vals);
        }
        Ok(out)
    };

    let cells = read_indices(nc, dim + 1, "cell line")?;
    let facets = read_indices(nb, dim, "boundary facet line")?;

    let mesh = SimplicialMesh::from_parts(dim, coords, cells, 0, Vec::new())?;
    // The file's boundary section must agree with the census-derived one.
    let mut declared: Vec<Vec<u32>> = facets
        .chunks(dim)
        .map(|f| {
            let mut f = f.to_vec();
            f.sort_unstable();
            f
        })
        .collect();
    declared.sort();
    let mut derived: Vec<Vec<u32>> =
        (0..mesh.n_boundary_facets()).map(|f| mesh.boundary_facet(f).to_vec()).collect();
    derived.sort();
    if declared != derived {
        return Err(FemError::MeshFormat {
            line: 0,
            message: "boundary facets do not match the facet census of the cells".into(),
        });
    }
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::super::{generate_cube, generate_lshape};
    use super::read_mesh;
    use std::io::BufReader;

    #[test]
    fn round_trip_preserves_mesh_exactly() {
        for mesh in [generate_lshape(2).unwrap(), generate_cube(1).unwrap()] {
            let mut buf = Vec::new();
            mesh.write_text(&mut buf).unwrap();
            let back = read_mesh(&mut BufReader::new(&buf[..])).unwrap();
            assert_eq!(back.dim(), mesh.dim());
            assert_eq!(back.n_vertices(), mesh.n_vertices());
            assert_eq!(back.n_cells(), mesh.n_cells());
            assert_eq!(back.n_boundary_facets(), mesh.n_boundary_facets());
            for v in 0..mesh.n_vertices() {
                assert_eq!(back.vertex(v), mesh.vertex(v), "coordinates must round-trip exactly");
            }
            for c in 0..mesh.n_cells() {
                assert_eq!(back.cell(c), mesh.cell(c));
            }
        }
    }

    #[test]
    fn header_line_is_checked() {
        let text = "2 3\n";
        let err = read_mesh(&mut BufReader::new(text.as_bytes()));
        assert!(err.is_err());
    }

    #[test]
    fn bad_coordinate_reports_line_number() {
        let text = "2 3 1 3\n0 0\n1 zero\n0 1\n0 1 2\n0 1\n0 2\n1 2\n";
        match read_mesh(&mut BufReader::new(text.as_bytes())) {
            Err(crate::error::FemError::MeshFormat { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected MeshFormat error, got {other:?}"),
        }
    }

    #[test]
    fn out_of_range_index_is_rejected() {
        let text = "2 3 1 3\n0 0\n1 0\n0 1\n0 1 7\n0 1\n0 2\n1 2\n";
        assert!(read_mesh(&mut BufReader::new(text.as_bytes())).is_err());
    }
}
