//! Triangle meshes in ℝ³ from tori in S³: stereographic projection, OBJ I/O,
//! topology and a self-intersection scan.

use std::collections::{HashMap, HashSet};
use std::io::{BufRead, Write};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hopf::EquivariantImmersion;

/// Projection centre used when none is given.
pub const DEFAULT_POLE: [f64; 4] = [0.0, 0.0, 0.0, 1.0];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Mesh3 {
    pub vertices: Vec<[f64; 3]>,
    /// Counterclockwise seen from outside (positive enclosed volume).
    pub triangles: Vec<[usize; 3]>,
}

/// Orthonormal frame of the tangent space at the pole, from Gram–Schmidt on the standard basis.
fn pole_frame(pole: &[f64; 4]) -> [[f64; 4]; 3] {
    let mut basis: Vec<[f64; 4]> = vec![*pole];
    for e in 0..4 {
        let mut v = [0.0; 4];
        v[e] = 1.0;
        for b in &basis {
            let d: f64 = (0..4).map(|c| v[c] * b[c]).sum();
            (0..4).for_each(|c| v[c] -= d * b[c]);
        }
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-8 && basis.len() < 4 {
            basis.push(v.map(|x| x / n));
        }
    }
    [basis[1], basis[2], basis[3]]
}

/// Stereographic projection S³ ∖ {pole} → ℝ³; the pole (0,0,0,1) gives (x₀, x₁, x₂)/(1 − x₃).
pub fn stereographic(p: &[f64; 4], pole: &[f64; 4]) -> [f64; 3] {
    let frame = pole_frame(pole);
    project(p, pole, &frame)
}

fn project(p: &[f64; 4], pole: &[f64; 4], frame: &[[f64; 4]; 3]) -> [f64; 3] {
    let h: f64 = (0..4).map(|c| p[c] * pole[c]).sum();
    let d = 1.0 - h;
    frame.map(|e| (0..4).map(|c| p[c] * e[c]).sum::<f64>() / d)
}

fn dist4(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    (0..4).map(|c| (a[c] - b[c]).powi(2)).sum::<f64>().sqrt()
}

impl Mesh3 {
    /// Project every vertex and split each grid quad into two triangles.
    ///
    /// Fails when the pole is within one mesh spacing of a vertex.
    pub fn from_immersion(f: &EquivariantImmersion, pole: &[f64; 4]) -> Result<Mesh3> {
        let pn = pole.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(pn > 0.0) {
            return Err(Error::OutOfRange("projection pole must be nonzero".into()));
        }
        let pole = pole.map(|x| x / pn);
        let mut spacing: f64 = 0.0;
        for i in 0..f.nx {
            for j in 0..f.ny {
                spacing = spacing.max(dist4(&f.at(i, j), &f.at(i + 1, j))).max(dist4(&f.at(i, j), &f.at(i, j + 1)));
            }
        }
        let nearest = f.points.iter().map(|p| dist4(p, &pole)).fold(f64::INFINITY, f64::min);
        if nearest < spacing {
            return Err(Error::PoleOnSurface { distance: nearest });
        }
        let frame = pole_frame(&pole);
        let vertices: Vec<[f64; 3]> = f.points.iter().map(|p| project(p, &pole, &frame)).collect();
        let id = |i: usize, j: usize| (i % f.nx) * f.ny + (j % f.ny);
        let mut triangles = Vec::with_capacity(2 * f.nx * f.ny);
        for i in 0..f.nx {
            for j in 0..f.ny {
                let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
                triangles.push([a, b, c]);
                triangles.push([a, c, d]);
            }
        }
        let mut m = Mesh3 { vertices, triangles };
        if m.signed_volume() < 0.0 {
            m.triangles.iter_mut().for_each(|t| t.swap(1, 2));
        }
        Ok(m)
    }

    /// Σ det(v₀, v₁, v₂)/6.
    pub fn signed_volume(&self) -> f64 {
        self.triangles
            .iter()
            .map(|t| {
                let (a, b, c) = (self.vertices[t[0]], self.vertices[t[1]], self.vertices[t[2]]);
                a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0])
                    + a[2] * (b[0] * c[1] - b[1] * c[0])
            })
            .sum::<f64>()
            / 6.0
    }

    /// V − E + F.
    pub fn euler_characteristic(&self) -> i64 {
        let mut edges = HashSet::new();
        for t in &self.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                edges.insert((a.min(b), a.max(b)));
            }
        }
        self.vertices.len() as i64 - edges.len() as i64 + self.triangles.len() as i64
    }

    /// Every directed edge appears once and its reverse once: a closed, consistently oriented surface.
    pub fn is_consistently_oriented(&self) -> bool {
        let mut seen = HashSet::new();
        for t in &self.triangles {
            for k in 0..3 {
                if !seen.insert((t[k], t[(k + 1) % 3])) {
                    return false;
                }
            }
        }
        seen.iter().all(|&(a, b)| seen.contains(&(b, a)))
    }

    /// OBJ text with `header` lines written as comments first.
    pub fn write_obj<W: Write>(&self, out: &mut W, header: &[String]) -> std::io::Result<()> {
        for h in header {
            writeln!(out, "# {h}")?;
        }
        for v in &self.vertices {
            writeln!(out, "v {:.15e} {:.15e} {:.15e}", v[0], v[1], v[2])?;
        }
        for t in &self.triangles {
            writeln!(out, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1)?;
        }
        Ok(())
    }

    /// Reads `v` and triangular `f` records; comments and other records are skipped.
    pub fn read_obj<R: BufRead>(input: R) -> std::io::Result<(Mesh3, Vec<String>)> {
        let bad = |l: &str| std::io::Error::new(std::io::ErrorKind::InvalidData, format!("bad OBJ line: {l}"));
        let mut m = Mesh3 { vertices: Vec::new(), triangles: Vec::new() };
        let mut comments = Vec::new();
        for line in input.lines() {
            let line = line?;
            let mut it = line.split_whitespace();
            match it.next() {
                Some("v") => {
                    let v: Vec<f64> = it.map(|s| s.parse().map_err(|_| bad(&line))).collect::<std::io::Result<_>>()?;
                    if v.len() < 3 {
                        return Err(bad(&line));
                    }
                    m.vertices.push([v[0], v[1], v[2]]);
                }
                Some("f") => {
                    let f: Vec<usize> = it
                        .map(|s| s.split('/').next().unwrap_or("").parse::<usize>().map_err(|_| bad(&line)))
                        .collect::<std::io::Result<_>>()?;
                    if f.len() != 3 || f.contains(&0) {
                        return Err(bad(&line));
                    }
                    m.triangles.push([f[0] - 1, f[1] - 1, f[2] - 1]);
                }
                Some(c) if c.starts_with('#') => comments.push(line.trim_start_matches('#').trim().to_string()),
                _ => {}
            }
        }
        Ok((m, comments))
    }

    /// Number of (edge, triangle) pairs that cross, over edges and triangles sharing no vertex.
    pub fn self_intersections(&self) -> usize {
        let v = &self.vertices;
        let mut edges = HashSet::new();
        let mut mean_edge = 0.0;
        for t in &self.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                if edges.insert((a.min(b), a.max(b))) {
                    mean_edge += dist3(&v[a], &v[b]);
                }
            }
        }
        if edges.is_empty() {
            return 0;
        }
        let cell = 2.0 * mean_edge / edges.len() as f64;
        let key = |p: &[f64; 3]| p.map(|x| (x / cell).floor() as i64);
        let mut grid: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
        for (ti, t) in self.triangles.iter().enumerate() {
            let (lo, hi) = bbox(&[v[t[0]], v[t[1]], v[t[2]]]);
            let (kl, kh) = (key(&lo), key(&hi));
            for x in kl[0]..=kh[0] {
                for y in kl[1]..=kh[1] {
                    for z in kl[2]..=kh[2] {
                        grid.entry([x, y, z]).or_default().push(ti);
                    }
                }
            }
        }
        let mut edges: Vec<(usize, usize)> = edges.into_iter().collect();
        edges.sort_unstable();
        let mut count = 0;
        let mut cand = Vec::new();
        for &(a, b) in &edges {
            let (lo, hi) = bbox(&[v[a], v[b]]);
            let (kl, kh) = (key(&lo), key(&hi));
            cand.clear();
            for x in kl[0]..=kh[0] {
                for y in kl[1]..=kh[1] {
                    for z in kl[2]..=kh[2] {
                        if let Some(ts) = grid.get(&[x, y, z]) {
                            cand.extend_from_slice(ts);
                        }
                    }
                }
            }
            cand.sort_unstable();
            cand.dedup();
            for &ti in &cand {
                let t = self.triangles[ti];
                if t.contains(&a) || t.contains(&b) {
                    continue;
                }
                if segment_hits_triangle(&v[a], &v[b], &v[t[0]], &v[t[1]], &v[t[2]]) {
                    count += 1;
                }
            }
        }
        count
    }
}

fn dist3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    (0..3).map(|c| (a[c] - b[c]).powi(2)).sum::<f64>().sqrt()
}

fn bbox(pts: &[[f64; 3]]) -> ([f64; 3], [f64; 3]) {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for p in pts {
        for c in 0..3 {
            lo[c] = lo[c].min(p[c]);
            hi[c] = hi[c].max(p[c]);
        }
    }
    (lo, hi)
}

fn sub(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Möller–Trumbore restricted to the open segment and the open triangle.
pub fn segment_hits_triangle(p: &[f64; 3], q: &[f64; 3], a: &[f64; 3], b: &[f64; 3], c: &[f64; 3]) -> bool {
    let d = sub(q, p);
    let (e1, e2) = (sub(b, a), sub(c, a));
    let h = cross(&d, &e2);
    let det = dot(&e1, &h);
    let scale = dot(&d, &d).sqrt() * dot(&e1, &e1).sqrt() * dot(&e2, &e2).sqrt();
    if det.abs() <= 1e-14 * scale {
        return false;
    }
    let s = sub(p, a);
    let u = dot(&s, &h) / det;
    if u <= 0.0 || u >= 1.0 {
        return false;
    }
    let qv = cross(&s, &e1);
    let w = dot(&d, &qv) / det;
    if w <= 0.0 || u + w >= 1.0 {
        return false;
    }
    let t = dot(&e2, &qv) / det;
    t > 0.0 && t < 1.0
}
