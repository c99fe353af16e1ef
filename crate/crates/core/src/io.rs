//! File formats: point, signal, label and edge-list CSVs, and the binary
//! frame coefficient file with its JSON sidecar.
//!
//! Coefficient file layout (all integers and floats little-endian):
//!
//! | bytes | field |
//! |-------|-------|
//! | 4 | magic `WFTG` |
//! | 4 | format version, `u32` (currently 1) |
//! | 8 | vertex count `K`, `u64` |
//! | 4 | high-pass band count `r`, `u32` |
//! | 4 | levels `L`, `u32` |
//! | 4 | dilation scale `N`, `i32` |
//! | 4 | Chebyshev order `n`, `u32` |
//! | 4 | family id, `u32` (0 haar, 1 linear, 2 quadratic, 3 bspline) |
//! | 4 | laplacian kind, `u32` (0 unnormalized, 1 random-walk, 2 symmetric) |
//! | `8 K (rL+1)` | band vectors as `f64`, bands in storage order |

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, LaplacianKind, PointCloud};
use crate::masks::MaskFamily;
use crate::wftg::{FrameCoefficients, FrameMeta};

pub const COEFF_MAGIC: &[u8; 4] = b"WFTG";
pub const COEFF_VERSION: u32 = 1;
const HEADER_LEN: usize = 40;

/// Round-trip float formatting (17 significant digits).
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_f64(field: &str, line: usize) -> Result<f64> {
    field.trim().parse::<f64>().map_err(|e| Error::Parse {
        line,
        msg: format!("`{}`: {e}", field.trim()),
    })
}

fn parse_usize(field: &str, line: usize) -> Result<usize> {
    field.trim().parse::<usize>().map_err(|e| Error::Parse {
        line,
        msg: format!("`{}`: {e}", field.trim()),
    })
}

/// Non-empty lines with 1-based line numbers, optionally skipping a header line.
fn data_lines(reader: impl BufRead, skip_header: bool) -> Result<Vec<(usize, String)>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if i == 0 && skip_header {
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        out.push((i + 1, line));
    }
    Ok(out)
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path)?))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

pub fn read_points(reader: impl BufRead, skip_header: bool) -> Result<PointCloud> {
    let rows = data_lines(reader, skip_header)?
        .into_iter()
        .map(|(ln, line)| {
            line.split(',')
                .map(|f| parse_f64(f, ln))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    PointCloud::new(rows)
}

pub fn read_points_csv(path: &Path, skip_header: bool) -> Result<PointCloud> {
    read_points(open(path)?, skip_header)
}

pub fn write_points(mut w: impl Write, pc: &PointCloud) -> Result<()> {
    for p in pc.points() {
        let row: Vec<String> = p.iter().map(|&x| fmt_f64(x)).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

pub fn write_points_csv(path: &Path, pc: &PointCloud) -> Result<()> {
    let mut w = create(path)?;
    write_points(&mut w, pc)?;
    w.flush()?;
    Ok(())
}

pub fn read_signal(reader: impl BufRead, skip_header: bool) -> Result<Vec<f64>> {
    data_lines(reader, skip_header)?
        .into_iter()
        .map(|(ln, line)| {
            let mut fields = line.split(',');
            let v = parse_f64(fields.next().unwrap_or(""), ln)?;
            if fields.next().is_some() {
                return Err(Error::Parse {
                    line: ln,
                    msg: "signal rows must have one column".into(),
                });
            }
            Ok(v)
        })
        .collect()
}

pub fn read_signal_csv(path: &Path, skip_header: bool) -> Result<Vec<f64>> {
    read_signal(open(path)?, skip_header)
}

pub fn write_signal(mut w: impl Write, f: &[f64]) -> Result<()> {
    for &x in f {
        writeln!(w, "{}", fmt_f64(x))?;
    }
    Ok(())
}

pub fn write_signal_csv(path: &Path, f: &[f64]) -> Result<()> {
    let mut w = create(path)?;
    write_signal(&mut w, f)?;
    w.flush()?;
    Ok(())
}

/// `index,label` rows with 0-based indices and labels in `{0, 1}`.
pub fn read_labels(reader: impl BufRead, skip_header: bool) -> Result<Vec<(usize, u8)>> {
    data_lines(reader, skip_header)?
        .into_iter()
        .map(|(ln, line)| {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 2 {
                return Err(Error::Parse {
                    line: ln,
                    msg: "expected `index,label`".into(),
                });
            }
            let idx = parse_usize(fields[0], ln)?;
            let label = parse_usize(fields[1], ln)?;
            if label > 1 {
                return Err(Error::Parse {
                    line: ln,
                    msg: format!("label {label} is not 0 or 1"),
                });
            }
            Ok((idx, label as u8))
        })
        .collect()
}

pub fn read_labels_csv(path: &Path, skip_header: bool) -> Result<Vec<(usize, u8)>> {
    read_labels(open(path)?, skip_header)
}

pub fn write_labels(mut w: impl Write, labels: &[(usize, u8)]) -> Result<()> {
    for &(i, c) in labels {
        writeln!(w, "{i},{c}")?;
    }
    Ok(())
}

pub fn write_labels_csv(path: &Path, labels: &[(usize, u8)]) -> Result<()> {
    let mut w = create(path)?;
    write_labels(&mut w, labels)?;
    w.flush()?;
    Ok(())
}

/// `i,j,weight` rows, 0-based, `i < j`.
pub fn write_edge_list(mut w: impl Write, g: &Graph) -> Result<()> {
    for (i, j, wt) in g.edges() {
        writeln!(w, "{i},{j},{}", fmt_f64(wt))?;
    }
    Ok(())
}

pub fn write_edge_list_csv(path: &Path, g: &Graph) -> Result<()> {
    let mut w = create(path)?;
    write_edge_list(&mut w, g)?;
    w.flush()?;
    Ok(())
}

/// Reads an edge list. The vertex count defaults to the largest index plus one.
pub fn read_edge_list(
    reader: impl BufRead,
    vertex_count: Option<usize>,
    skip_header: bool,
) -> Result<Graph> {
    let mut edges = Vec::new();
    for (ln, line) in data_lines(reader, skip_header)? {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(Error::Parse {
                line: ln,
                msg: "expected `i,j,weight`".into(),
            });
        }
        edges.push((
            parse_usize(fields[0], ln)?,
            parse_usize(fields[1], ln)?,
            parse_f64(fields[2], ln)?,
        ));
    }
    let inferred = edges.iter().map(|e| e.0.max(e.1) + 1).max().unwrap_or(0);
    Graph::from_edges(vertex_count.unwrap_or(inferred), &edges)
}

pub fn read_edge_list_csv(
    path: &Path,
    vertex_count: Option<usize>,
    skip_header: bool,
) -> Result<Graph> {
    read_edge_list(open(path)?, vertex_count, skip_header)
}

pub fn write_coefficients(mut w: impl Write, coeffs: &FrameCoefficients) -> Result<()> {
    let m = coeffs.meta();
    w.write_all(COEFF_MAGIC)?;
    w.write_all(&COEFF_VERSION.to_le_bytes())?;
    w.write_all(&(m.dim as u64).to_le_bytes())?;
    w.write_all(&(m.family.r() as u32).to_le_bytes())?;
    w.write_all(&(m.levels as u32).to_le_bytes())?;
    w.write_all(&m.dilation.to_le_bytes())?;
    w.write_all(&(m.order as u32).to_le_bytes())?;
    w.write_all(&m.family.id().to_le_bytes())?;
    w.write_all(&m.kind.id().to_le_bytes())?;
    for band in coeffs.bands() {
        for v in band {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

fn u32_at(buf: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(buf[at..at + 4].try_into().unwrap())
}

pub fn read_coefficients(mut r: impl Read) -> Result<FrameCoefficients> {
    let mut buf = Vec::new();
    r.read_to_end(&mut buf)?;
    if buf.len() < HEADER_LEN || &buf[..4] != COEFF_MAGIC {
        return Err(Error::MetaMismatch(
            "missing coefficient file header".into(),
        ));
    }
    let version = u32_at(&buf, 4);
    if version != COEFF_VERSION {
        return Err(Error::MetaMismatch(format!(
            "unsupported format version {version}"
        )));
    }
    let dim = u64::from_le_bytes(buf[8..16].try_into().unwrap()) as usize;
    let r = u32_at(&buf, 16) as usize;
    let levels = u32_at(&buf, 20) as usize;
    let dilation = i32::from_le_bytes(buf[24..28].try_into().unwrap());
    let order = u32_at(&buf, 28) as usize;
    let family = MaskFamily::from_id(u32_at(&buf, 32), r).ok_or_else(|| {
        Error::MetaMismatch(format!(
            "unknown family id {} with r = {r}",
            u32_at(&buf, 32)
        ))
    })?;
    let kind = LaplacianKind::from_id(u32_at(&buf, 36)).ok_or_else(|| {
        Error::MetaMismatch(format!("unknown laplacian kind {}", u32_at(&buf, 36)))
    })?;
    if levels == 0 {
        return Err(Error::MetaMismatch("zero levels".into()));
    }
    let band_count = r * levels + 1;
    let expected = dim
        .checked_mul(band_count)
        .and_then(|n| n.checked_mul(8))
        .and_then(|n| n.checked_add(HEADER_LEN))
        .ok_or_else(|| Error::MetaMismatch("header sizes overflow".into()))?;
    if buf.len() != expected {
        return Err(Error::MetaMismatch(format!(
            "file has {} bytes, header implies {expected}",
            buf.len()
        )));
    }
    let values: Vec<f64> = buf[HEADER_LEN..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let bands = values
        .chunks(dim.max(1))
        .take(band_count)
        .map(<[f64]>::to_vec)
        .collect();
    let meta = FrameMeta {
        family,
        levels,
        dilation,
        order,
        kind,
        dim,
    };
    let bands = if dim == 0 {
        vec![Vec::new(); band_count]
    } else {
        bands
    };
    FrameCoefficients::new(meta, bands)
}

#[derive(Debug, Serialize, Deserialize)]
struct SidecarBand {
    j: usize,
    l: usize,
    values: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Sidecar {
    format_version: u32,
    meta: FrameMeta,
    bands: Vec<SidecarBand>,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Writes the binary file at `path` and its JSON mirror at `path.json`.
pub fn write_coefficient_files(path: &Path, coeffs: &FrameCoefficients) -> Result<()> {
    let mut w = create(path)?;
    write_coefficients(&mut w, coeffs)?;
    w.flush()?;
    let sidecar = Sidecar {
        format_version: COEFF_VERSION,
        meta: *coeffs.meta(),
        bands: coeffs
            .indices()
            .into_iter()
            .zip(coeffs.bands())
            .map(|(idx, values)| SidecarBand {
                j: idx.j,
                l: idx.l,
                values: values.clone(),
            })
            .collect(),
    };
    let mut sw = create(&sidecar_path(path))?;
    serde_json::to_writer_pretty(&mut sw, &sidecar)?;
    sw.flush()?;
    Ok(())
}

pub fn read_coefficient_file(path: &Path) -> Result<FrameCoefficients> {
    read_coefficients(open(path)?)
}

/// Reads coefficients back from the JSON mirror.
pub fn read_coefficient_sidecar(path: &Path) -> Result<FrameCoefficients> {
    let sidecar: Sidecar = serde_json::from_reader(open(path)?)?;
    FrameCoefficients::new(
        sidecar.meta,
        sidecar.bands.into_iter().map(|b| b.values).collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wftg::band_order;

    fn sample_coeffs() -> FrameCoefficients {
        let meta = FrameMeta {
            family: MaskFamily::Linear,
            levels: 2,
            dilation: 3,
            order: 8,
            kind: LaplacianKind::Unnormalized,
            dim: 3,
        };
        let bands = (0..5)
            .map(|b| (0..3).map(|k| b as f64 + 0.1 * k as f64).collect())
            .collect();
        FrameCoefficients::new(meta, bands).unwrap()
    }

    #[test]
    fn coefficient_header_layout() {
        let mut buf = Vec::new();
        write_coefficients(&mut buf, &sample_coeffs()).unwrap();
        assert_eq!(buf.len(), HEADER_LEN + 8 * 3 * 5);
        assert_eq!(&buf[..4], b"WFTG");
        assert_eq!(u32_at(&buf, 4), 1);
        assert_eq!(u64::from_le_bytes(buf[8..16].try_into().unwrap()), 3);
        assert_eq!(u32_at(&buf, 16), 2);
        assert_eq!(u32_at(&buf, 20), 2);
        assert_eq!(i32::from_le_bytes(buf[24..28].try_into().unwrap()), 3);
        assert_eq!(u32_at(&buf, 28), 8);
        assert_eq!(u32_at(&buf, 32), 1);
        assert_eq!(u32_at(&buf, 36), 0);
        assert_eq!(f64::from_le_bytes(buf[40..48].try_into().unwrap()), 0.0);
        assert_eq!(f64::from_le_bytes(buf[48..56].try_into().unwrap()), 0.1);
        assert_eq!(band_order(2, 2).len(), 5);
    }

    #[test]
    fn corrupted_coefficients_rejected() {
        let mut buf = Vec::new();
        write_coefficients(&mut buf, &sample_coeffs()).unwrap();
        let mut truncated = buf.clone();
        truncated.pop();
        assert!(matches!(
            read_coefficients(&truncated[..]),
            Err(Error::MetaMismatch(_))
        ));
        let mut bad_magic = buf.clone();
        bad_magic[0] = b'X';
        assert!(matches!(
            read_coefficients(&bad_magic[..]),
            Err(Error::MetaMismatch(_))
        ));
        let mut bad_family = buf.clone();
        bad_family[32] = 9;
        assert!(matches!(
            read_coefficients(&bad_family[..]),
            Err(Error::MetaMismatch(_))
        ));
        assert_eq!(read_coefficients(&buf[..]).unwrap(), sample_coeffs());
    }

    #[test]
    fn sidecar_mirrors_binary() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.bin");
        write_coefficient_files(&path, &sample_coeffs()).unwrap();
        let a = read_coefficient_file(&path).unwrap();
        let b = read_coefficient_sidecar(&sidecar_path(&path)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn csv_parsing() {
        let pc = read_points("x,y\n0,1\n2.5,-3\n\n".as_bytes(), true).unwrap();
        assert_eq!(pc.points(), &[vec![0.0, 1.0], vec![2.5, -3.0]]);
        assert!(matches!(
            read_points("0,1\n2,abc\n".as_bytes(), false),
            Err(Error::Parse { line: 2, .. })
        ));
        assert_eq!(
            read_signal("1.5\n-2\n".as_bytes(), false).unwrap(),
            vec![1.5, -2.0]
        );
        assert!(read_signal("1,2\n".as_bytes(), false).is_err());
        assert_eq!(
            read_labels("0,1\n4,0\n".as_bytes(), false).unwrap(),
            vec![(0, 1), (4, 0)]
        );
        assert!(read_labels("0,2\n".as_bytes(), false).is_err());
    }

    #[test]
    fn edge_list_round_trip() {
        let g = Graph::from_edges(4, &[(0, 1, 0.5), (1, 2, 1.0 / 3.0), (2, 3, 2.0)]).unwrap();
        let mut buf = Vec::new();
        write_edge_list(&mut buf, &g).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.lines().all(|l| {
            let f: Vec<&str> = l.split(',').collect();
            f[0].parse::<usize>().unwrap() < f[1].parse::<usize>().unwrap()
        }));
        let back = read_edge_list(&buf[..], None, false).unwrap();
        assert_eq!(back.edges(), g.edges());
    }

    #[test]
    fn float_format_round_trips() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
    }
}
