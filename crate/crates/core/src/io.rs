//! CSV formats for sites, coefficient tables, samples and predictions; atomic file writes.

use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::geometry::{Dims, Site, UnitVector};
use crate::linalg::{from_upper_triangle, upper_triangle};
use crate::spectral::CoefficientTable;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes through a temporary file in the target directory, then renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err(path))?;
    tmp.write_all(bytes).map_err(io_err(path))?;
    tmp.flush().map_err(io_err(path))?;
    tmp.persist(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e.error,
    })?;
    Ok(())
}

pub fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(io_err(path))
}

fn csv_bytes(header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.into_inner().map_err(|e| Error::Config(format!("csv buffer: {e}")))
}

fn num(x: f64) -> String {
    format!("{x:?}")
}

pub fn site_header(dims: Dims) -> Vec<String> {
    let mut h = Vec::new();
    h.extend((0..=dims.d1).map(|i| format!("x1_{i}")));
    h.extend((0..=dims.d2).map(|i| format!("x2_{i}")));
    h.extend((0..dims.d).map(|i| format!("u_{i}")));
    h
}

fn site_fields(s: &Site) -> Vec<String> {
    s.x1.coords()
        .iter()
        .chain(s.x2.coords())
        .chain(&s.u)
        .map(|&v| num(v))
        .collect()
}

/// Count of leading columns named `prefix0, prefix1, ...` starting at `start`.
fn run_length(header: &csv::StringRecord, start: usize, prefix: &str) -> usize {
    header
        .iter()
        .skip(start)
        .enumerate()
        .take_while(|(i, name)| *name == format!("{prefix}{i}"))
        .count()
}

/// Sites plus any remaining numeric columns (named in the returned header).
pub struct SiteTable {
    pub dims: Dims,
    pub sites: Vec<Site>,
    pub extra_header: Vec<String>,
    pub extra: Vec<Vec<f64>>,
}

pub fn parse_site_table(text: &str, origin: &str) -> Result<SiteTable> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let header = rdr.headers()?.clone();
    let n1 = run_length(&header, 0, "x1_");
    let n2 = run_length(&header, n1, "x2_");
    let nd = run_length(&header, n1 + n2, "u_");
    if n1 < 2 || n2 < 2 || nd < 1 {
        return Err(Error::Config(format!(
            "{origin}: site header must start with x1_0..x1_d1, x2_0..x2_d2, u_0..u_(d-1)"
        )));
    }
    let dims = Dims::new(n1 as u32 - 1, n2 as u32 - 1, nd as u32)?;
    let width = n1 + n2 + nd;
    let extra_header: Vec<String> = header.iter().skip(width).map(str::to_string).collect();
    let mut sites = Vec::new();
    let mut extra = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let vals = rec
            .iter()
            .map(|f| f.parse::<f64>())
            .collect::<std::result::Result<Vec<f64>, _>>()
            .map_err(|e| Error::Config(format!("{origin}: row {}: {e}", line + 2)))?;
        if vals.len() != header.len() {
            return Err(Error::Config(format!("{origin}: row {} has {} fields", line + 2, vals.len())));
        }
        let x1 = UnitVector::new(vals[..n1].to_vec())?;
        let x2 = UnitVector::new(vals[n1..n1 + n2].to_vec())?;
        sites.push(Site::new(x1, x2, vals[n1 + n2..width].to_vec())?);
        extra.push(vals[width..].to_vec());
    }
    Ok(SiteTable {
        dims,
        sites,
        extra_header,
        extra,
    })
}

pub fn read_sites(path: &Path) -> Result<(Dims, Vec<Site>)> {
    let t = parse_site_table(&read_to_string(path)?, &path.display().to_string())?;
    if !t.extra_header.is_empty() {
        return Err(Error::Config(format!(
            "{}: unexpected columns {:?} in a site file",
            path.display(),
            t.extra_header
        )));
    }
    Ok((t.dims, t.sites))
}

pub fn sites_csv(dims: Dims, sites: &[Site]) -> Result<Vec<u8>> {
    csv_bytes(&site_header(dims), sites.iter().map(site_fields))
}

/// Observations: site columns followed by `z_0..z_{p-1}`.
pub fn read_observations(path: &Path, p: usize) -> Result<(Dims, Vec<Site>, DMatrix<f64>)> {
    let t = parse_site_table(&read_to_string(path)?, &path.display().to_string())?;
    let want: Vec<String> = (0..p).map(|c| format!("z_{c}")).collect();
    if t.extra_header != want {
        return Err(Error::Config(format!(
            "{}: expected value columns {want:?}, found {:?}",
            path.display(),
            t.extra_header
        )));
    }
    let values = DMatrix::from_fn(t.sites.len(), p, |i, c| t.extra[i][c]);
    Ok((t.dims, t.sites, values))
}

fn triangle_header(prefix: &str, p: usize) -> Vec<String> {
    (0..p).flat_map(|i| (i..p).map(move |j| format!("{prefix}_{i}_{j}"))).collect()
}

pub fn table_csv(t: &CoefficientTable) -> Result<Vec<u8>> {
    let mut header = vec!["k1".to_string(), "k2".into(), "h".into()];
    header.extend(triangle_header("b", t.p));
    let mut rows = Vec::new();
    for k1 in 0..=t.k_max.0 {
        for k2 in 0..=t.k_max.1 {
            for (hi, &h) in t.h_grid.iter().enumerate() {
                let mut r = vec![k1.to_string(), k2.to_string(), num(h)];
                r.extend(upper_triangle(t.get(k1, k2, hi)?).into_iter().map(num));
                rows.push(r);
            }
        }
    }
    let mut out = format!("# d1={},d2={},p={}\n", t.d1, t.d2, t.p).into_bytes();
    out.extend(csv_bytes(&header, rows)?);
    Ok(out)
}

pub fn parse_table(text: &str) -> Result<CoefficientTable> {
    let (meta, body) = text
        .split_once('\n')
        .ok_or_else(|| Error::Config("empty coefficient table".into()))?;
    let meta = meta
        .strip_prefix('#')
        .ok_or_else(|| Error::Config("coefficient table must start with a `# d1=..,d2=..,p=..` line".into()))?;
    let get = |key: &str| -> Result<usize> {
        meta.split(',')
            .filter_map(|kv| kv.trim().split_once('='))
            .find(|(k, _)| *k == key)
            .and_then(|(_, v)| v.trim().parse().ok())
            .ok_or_else(|| Error::Config(format!("coefficient table metadata lacks `{key}`")))
    };
    let (d1, d2, p) = (get("d1")? as u32, get("d2")? as u32, get("p")?);
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(body.as_bytes());
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let f = |i: usize| -> Result<f64> {
            rec.get(i)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| Error::Config(format!("bad field {i} in coefficient row {rec:?}")))
        };
        let vals = (3..3 + p * (p + 1) / 2).map(f).collect::<Result<Vec<_>>>()?;
        rows.push((f(0)? as usize, f(1)? as usize, f(2)?, vals));
    }
    let k_max = rows.iter().fold((0, 0), |(a, b), r| (a.max(r.0), b.max(r.1)));
    let mut h_grid: Vec<f64> = rows.iter().map(|r| r.2).collect();
    h_grid.sort_by(|a, b| a.total_cmp(b));
    h_grid.dedup();
    let mut t = CoefficientTable::zeros(d1, d2, p, k_max, h_grid.clone())?;
    for (k1, k2, h, vals) in rows {
        let hi = h_grid.iter().position(|&x| x == h).unwrap();
        t.set(k1, k2, hi, from_upper_triangle(p, &vals)?)?;
    }
    Ok(t)
}

/// `sample, <site columns>, z_0..z_{p-1}`.
pub fn samples_csv(dims: Dims, sites: &[Site], samples: &[crate::fields::FieldSample], p: usize) -> Result<Vec<u8>> {
    let mut header = vec!["sample".to_string()];
    header.extend(site_header(dims));
    header.extend((0..p).map(|c| format!("z_{c}")));
    let rows = samples.iter().enumerate().flat_map(|(i, s)| {
        sites.iter().enumerate().map(move |(a, site)| {
            let mut r = vec![i.to_string()];
            r.extend(site_fields(site));
            r.extend((0..p).map(|c| num(s.values[(a, c)])));
            r
        })
    });
    csv_bytes(&header, rows)
}

/// `<site columns>, pred_0.., var_0..`.
pub fn kriging_csv(dims: Dims, sites: &[Site], k: &crate::fields::Kriging) -> Result<Vec<u8>> {
    let p = k.predictions.ncols();
    let mut header = site_header(dims);
    header.extend((0..p).map(|c| format!("pred_{c}")));
    header.extend((0..p).map(|c| format!("var_{c}")));
    let rows = sites.iter().enumerate().map(|(a, site)| {
        let mut r = site_fields(site);
        r.extend((0..p).map(|c| num(k.predictions[(a, c)])));
        r.extend((0..p).map(|c| num(k.variances[(a, c)])));
        r
    });
    csv_bytes(&header, rows)
}

/// Numeric matrix with columns `c_0..`.
pub fn matrix_csv(m: &DMatrix<f64>) -> Result<Vec<u8>> {
    let header: Vec<String> = (0..m.ncols()).map(|j| format!("c_{j}")).collect();
    csv_bytes(&header, (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| num(m[(i, j)])).collect()))
}

/// `(s, r, h)` triples from a CSV with exactly those columns.
pub fn read_invariants(path: &Path) -> Result<Vec<crate::geometry::Invariants3>> {
    let text = read_to_string(path)?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header != ["s", "r", "h"] {
        return Err(Error::Config(format!("{}: expected header s,r,h, found {header:?}", path.display())));
    }
    rdr.records()
        .enumerate()
        .map(|(line, rec)| {
            let rec = rec?;
            let v = rec
                .iter()
                .map(|f| f.parse::<f64>())
                .collect::<std::result::Result<Vec<f64>, _>>()
                .map_err(|e| Error::Config(format!("{}: row {}: {e}", path.display(), line + 2)))?;
            if !(-1.0..=1.0).contains(&v[0]) || !(-1.0..=1.0).contains(&v[1]) || v[2] < 0.0 {
                return Err(Error::Config(format!(
                    "{}: row {}: need s, r in [-1, 1] and h >= 0",
                    path.display(),
                    line + 2
                )));
            }
            Ok(crate::geometry::Invariants3::new(v[0], v[1], v[2]))
        })
        .collect()
}

/// `s, r, h, k_i_j...` for evaluated kernel values.
pub fn eval_csv(p: usize, rows: &[(crate::geometry::Invariants3, DMatrix<f64>)]) -> Result<Vec<u8>> {
    let mut header = vec!["s".to_string(), "r".into(), "h".into()];
    header.extend(triangle_header("k", p));
    csv_bytes(
        &header,
        rows.iter().map(|(inv, m)| {
            let mut r = vec![num(inv.s), num(inv.r), num(inv.h)];
            r.extend(upper_triangle(m).into_iter().map(num));
            r
        }),
    )
}

/// `a, b, k_i_j...` for kernel values between site pairs.
pub fn pair_eval_csv(p: usize, rows: &[(usize, usize, DMatrix<f64>)]) -> Result<Vec<u8>> {
    let mut header = vec!["a".to_string(), "b".into()];
    header.extend((0..p).flat_map(|i| (0..p).map(move |j| format!("k_{i}_{j}"))));
    csv_bytes(
        &header,
        rows.iter().map(|(a, b, m)| {
            let mut r = vec![a.to_string(), b.to_string()];
            r.extend((0..p).flat_map(|i| (0..p).map(move |j| num(m[(i, j)]))));
            r
        }),
    )
}

/// `k1, j, k2, j_prime, l, m, value` for recovered harmonic coefficients.
pub fn recovered_csv(coeffs: &[crate::nonstat::RecoveredCoefficient]) -> Result<Vec<u8>> {
    let header: Vec<String> = ["k1", "j", "k2", "j_prime", "l", "m", "value"].iter().map(|s| s.to_string()).collect();
    let rows = coeffs.iter().flat_map(|c| {
        let p = c.matrix.nrows();
        (0..p).flat_map(move |l| {
            (0..p).map(move |m| {
                vec![
                    c.k1.to_string(),
                    c.j.to_string(),
                    c.k2.to_string(),
                    c.j_prime.to_string(),
                    l.to_string(),
                    m.to_string(),
                    num(c.matrix[(l, m)]),
                ]
            })
        })
    });
    csv_bytes(&header, rows)
}

/// Generic table with a header of column names.
pub fn rows_csv(header: &[&str], rows: Vec<Vec<String>>) -> Result<Vec<u8>> {
    csv_bytes(&header.iter().map(|s| s.to_string()).collect::<Vec<_>>(), rows)
}

pub fn fmt_f64(x: f64) -> String {
    num(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::random_sites;

    #[test]
    fn sites_roundtrip() {
        let dims = Dims::new(2, 1, 3).unwrap();
        let sites = random_sites(5, 7, dims, 1.5);
        let text = String::from_utf8(sites_csv(dims, &sites).unwrap()).unwrap();
        let t = parse_site_table(&text, "mem").unwrap();
        assert_eq!(t.dims, dims);
        for (a, b) in t.sites.iter().zip(&sites) {
            assert!(a.x1.coords().iter().zip(b.x1.coords()).all(|(x, y)| (x - y).abs() < 1e-15));
            assert_eq!(a.u, b.u);
        }
    }

    #[test]
    fn bad_header_rejected() {
        assert!(parse_site_table("a,b\n1,2\n", "mem").is_err());
        assert!(parse_site_table("x1_0,x1_1,x2_0,x2_1\n1,0,1,0\n", "mem").is_err());
    }

    #[test]
    fn table_roundtrip() {
        let mut t = CoefficientTable::zeros(2, 3, 2, (1, 2), vec![0.0, 0.5]).unwrap();
        t.set(1, 2, 1, DMatrix::from_row_slice(2, 2, &[1.5, -0.25, -0.25, 0.1])).unwrap();
        let text = String::from_utf8(table_csv(&t).unwrap()).unwrap();
        assert!(text.starts_with("# d1=2,d2=3,p=2\nk1,k2,h,b_0_0,b_0_1,b_1_1\n"));
        assert_eq!(parse_table(&text).unwrap(), t);
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        write_atomic(&path, b"one").unwrap();
        write_atomic(&path, b"two").unwrap();
        assert_eq!(fs::read(&path).unwrap(), b"two");
    }
}
