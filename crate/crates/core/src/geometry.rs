//! Frame transport along the band midline.
//!
//! The band is described by its curvature K(s) and torsion W(s) sampled at the
//! centres of `n` equal arclength cells. Cell `i` spans `[i h, (i + 1) h]` and
//! its values are held constant across the cell, so node `i` (at `s = i h`)
//! sits on the boundary between cells `i - 1` and `i`.
//!
//! Frames are stored as 3x3 matrices with columns `(t, n, b)`. We use the
//! right-handed triad `b = t x n`, which is the same triad as `n = b x t`, so
//! the Frenet-Serret equations hold with
//! `t' = K n`, `n' = -K t + W b`, `b' = -W n`. In body coordinates the frame
//! rotates with the Darboux vector `(W, 0, K)`.
//!
//! Curvature is signed: a material frame can carry `K < 0`, which is what lets
//! a closed curve return with its normal reversed. For a Möbius closure `K` is
//! antiperiodic and `W` periodic.

use nalgebra::{Matrix3, Vector3};

use crate::error::{BandError, Result};
use crate::rotation;

pub type Frame = Matrix3<f64>;

const ORTHONORMAL_TOL: f64 = 1e-8;

/// How the frame must return after one circuit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Closure {
    /// Frame returns to itself.
    #[default]
    Orientable,
    /// Frame returns rotated by pi about the tangent: `n -> -n`, `b -> -b`.
    Moebius,
}

impl Closure {
    pub fn is_moebius(self) -> bool {
        matches!(self, Closure::Moebius)
    }

    /// Factor picked up by quantities that are odd in K when wrapping past `s = L`.
    pub fn odd_wrap_sign(self) -> f64 {
        match self {
            Closure::Orientable => 1.0,
            Closure::Moebius => -1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Closure::Orientable => "orientable",
            Closure::Moebius => "moebius",
        }
    }

    pub fn target(self, initial: &Frame) -> Frame {
        match self {
            Closure::Orientable => *initial,
            Closure::Moebius => initial * rotation::half_turn_about_tangent(),
        }
    }
}

impl std::str::FromStr for Closure {
    type Err = BandError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "orientable" | "false" | "none" => Ok(Closure::Orientable),
            "moebius" | "mobius" | "möbius" | "true" => Ok(Closure::Moebius),
            other => Err(BandError::InvalidInput(format!(
                "unknown closure `{other}` (expected orientable or moebius)"
            ))),
        }
    }
}

/// Curvature and torsion on a uniform, periodic arclength grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureTwistProfile {
    length: f64,
    curvature: Vec<f64>,
    twist: Vec<f64>,
    closure: Closure,
}

impl CurvatureTwistProfile {
    pub const MIN_NODES: usize = 8;

    pub fn new(length: f64, curvature: Vec<f64>, twist: Vec<f64>) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(BandError::InvalidInput(format!(
                "length must be positive, got {length}"
            )));
        }
        if curvature.len() != twist.len() {
            return Err(BandError::InvalidInput(format!(
                "K has {} samples but W has {}",
                curvature.len(),
                twist.len()
            )));
        }
        if curvature.len() < Self::MIN_NODES {
            return Err(BandError::InvalidInput(format!(
                "n_nodes must be ≥ {}, got {}",
                Self::MIN_NODES,
                curvature.len()
            )));
        }
        if let Some(i) = curvature
            .iter()
            .chain(twist.iter())
            .position(|v| !v.is_finite())
        {
            return Err(BandError::InvalidInput(format!(
                "non-finite sample at position {i}"
            )));
        }
        Ok(Self {
            length,
            curvature,
            twist,
            closure: Closure::Orientable,
        })
    }

    /// Samples `f(s) -> (K, W)` at the cell centres.
    pub fn from_fn(length: f64, n: usize, f: impl Fn(f64) -> (f64, f64)) -> Result<Self> {
        let h = length / n as f64;
        let (k, w) = (0..n).map(|i| f((i as f64 + 0.5) * h)).unzip();
        Self::new(length, k, w)
    }

    pub fn with_closure(mut self, closure: Closure) -> Self {
        self.closure = closure;
        self
    }

    pub fn n_nodes(&self) -> usize {
        self.curvature.len()
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.n_nodes() as f64
    }

    pub fn curvature(&self) -> &[f64] {
        &self.curvature
    }

    pub fn twist(&self) -> &[f64] {
        &self.twist
    }

    pub fn closure(&self) -> Closure {
        self.closure
    }

    /// Arclength of the centre of cell `i`.
    pub fn arclength(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.spacing()
    }

    pub fn arclengths(&self) -> Vec<f64> {
        (0..self.n_nodes()).map(|i| self.arclength(i)).collect()
    }

    /// Arclengths in `[0, L)` where K changes sign, interpolated linearly
    /// between cell centres. Across `s = L` the Möbius wrap sign is applied,
    /// so the antiperiodic sign flip of K is not counted as a crossing.
    pub fn curvature_sign_changes(&self) -> Vec<f64> {
        let n = self.n_nodes();
        let h = self.spacing();
        let sign = self.closure.odd_wrap_sign();
        (0..n)
            .filter_map(|i| {
                let k0 = self.curvature[i];
                let k1 = if i + 1 < n {
                    self.curvature[i + 1]
                } else {
                    sign * self.curvature[0]
                };
                ((k0 < 0.0) != (k1 < 0.0))
                    .then(|| (self.arclength(i) + h * k0 / (k0 - k1)).rem_euclid(self.length))
            })
            .collect()
    }

    /// The mirror-image band: `W -> -W`.
    pub fn mirrored(&self) -> Self {
        Self {
            twist: self.twist.iter().map(|w| -w).collect(),
            ..self.clone()
        }
    }

    /// Same band with the arclength origin moved forward by `shift` cells.
    /// Samples wrapping past the end pick up the Möbius sign on K.
    pub fn shifted(&self, shift: usize) -> Self {
        let n = self.n_nodes();
        let sign = self.closure.odd_wrap_sign();
        let lap_sign = if (shift / n).is_multiple_of(2) { 1.0 } else { sign };
        let mut k = Vec::with_capacity(n);
        let mut w = Vec::with_capacity(n);
        for i in 0..n {
            let j = i + shift % n;
            if j < n {
                k.push(lap_sign * self.curvature[j]);
            } else {
                k.push(lap_sign * sign * self.curvature[j - n]);
            }
            w.push(self.twist[j % n]);
        }
        Self {
            curvature: k,
            twist: w,
            ..self.clone()
        }
    }

    /// Replace the sample vectors, keeping length and closure.
    pub fn with_samples(&self, curvature: Vec<f64>, twist: Vec<f64>) -> Result<Self> {
        Ok(Self::new(self.length, curvature, twist)?.with_closure(self.closure))
    }

    /// Interpolate onto a grid of `n` cells. Linear between neighbouring cell
    /// centres, except across a sign flip of K, where the nearer sample is
    /// copied so that corners in the profile stay sharp.
    pub fn resample(&self, n: usize) -> Result<Self> {
        let m = self.n_nodes();
        let h_old = self.spacing();
        let h_new = self.length / n as f64;
        let sign = self.closure.odd_wrap_sign();
        let sample_k = |j: isize| -> f64 {
            let jm = j.rem_euclid(m as isize) as usize;
            let laps = j.div_euclid(m as isize);
            let s = if laps.rem_euclid(2) == 0 { 1.0 } else { sign };
            s * self.curvature[jm]
        };
        let sample_w = |j: isize| -> f64 { self.twist[j.rem_euclid(m as isize) as usize] };
        let mut k = Vec::with_capacity(n);
        let mut w = Vec::with_capacity(n);
        for i in 0..n {
            let x = (i as f64 + 0.5) * h_new / h_old - 0.5;
            let j0 = x.floor() as isize;
            let frac = x - j0 as f64;
            let (k0, k1) = (sample_k(j0), sample_k(j0 + 1));
            let (w0, w1) = (sample_w(j0), sample_w(j0 + 1));
            if k0 * k1 < 0.0 {
                if frac < 0.5 {
                    k.push(k0);
                    w.push(w0);
                } else {
                    k.push(k1);
                    w.push(w1);
                }
            } else {
                k.push(k0 + frac * (k1 - k0));
                w.push(w0 + frac * (w1 - w0));
            }
        }
        self.with_samples(k, w)
    }
}

/// Midline positions and frames at the `n` nodes, plus the node reached after
/// the final step (which coincides with node 0 for a closed band).
#[derive(Debug, Clone, PartialEq)]
pub struct FramedCurve {
    pub positions: Vec<Vector3<f64>>,
    pub frames: Vec<Frame>,
    pub end_position: Vector3<f64>,
    pub end_frame: Frame,
    pub length: f64,
}

impl FramedCurve {
    pub fn n_nodes(&self) -> usize {
        self.positions.len()
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.n_nodes() as f64
    }

    pub fn tangent(&self, i: usize) -> Vector3<f64> {
        self.frames[i].column(0).into_owned()
    }

    pub fn normal(&self, i: usize) -> Vector3<f64> {
        self.frames[i].column(1).into_owned()
    }

    pub fn binormal(&self, i: usize) -> Vector3<f64> {
        self.frames[i].column(2).into_owned()
    }

    /// Node positions including the end node, `n + 1` points.
    pub fn polyline(&self) -> Vec<Vector3<f64>> {
        let mut pts = self.positions.clone();
        pts.push(self.end_position);
        pts
    }

    /// Apply `x -> rotation * x + translation` to every position and frame.
    pub fn transformed(&self, rotation: &Matrix3<f64>, translation: &Vector3<f64>) -> Self {
        Self {
            positions: self
                .positions
                .iter()
                .map(|p| rotation * p + translation)
                .collect(),
            frames: self.frames.iter().map(|f| rotation * f).collect(),
            end_position: rotation * self.end_position + translation,
            end_frame: rotation * self.end_frame,
            length: self.length,
        }
    }

    pub fn diameter(&self) -> f64 {
        let mut d: f64 = 0.0;
        for (i, a) in self.positions.iter().enumerate() {
            for b in &self.positions[i + 1..] {
                d = d.max((a - b).norm());
            }
        }
        d
    }
}

/// Mismatch between the end of the reconstructed band and its start.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosureResidual {
    pub position_gap: Vector3<f64>,
    /// Rotation vector of `R_target^T R(L)`, expressed in the target frame.
    pub frame_gap: Vector3<f64>,
}

impl ClosureResidual {
    pub fn zero() -> Self {
        Self {
            position_gap: Vector3::zeros(),
            frame_gap: Vector3::zeros(),
        }
    }

    pub fn as_array(&self) -> [f64; 6] {
        [
            self.position_gap.x,
            self.position_gap.y,
            self.position_gap.z,
            self.frame_gap.x,
            self.frame_gap.y,
            self.frame_gap.z,
        ]
    }

    pub fn norm(&self) -> f64 {
        (self.position_gap.norm_squared() + self.frame_gap.norm_squared()).sqrt()
    }
}

fn check_frame(frame: &Frame) -> Result<()> {
    let deviation = rotation::orthonormality_deviation(frame);
    if deviation > ORTHONORMAL_TOL {
        return Err(BandError::NonOrthonormalFrame { deviation });
    }
    Ok(())
}

fn darboux(k: f64, w: f64) -> Vector3<f64> {
    Vector3::new(w, 0.0, k)
}

/// Advance `frame` by arclength `h` at constant curvature `k` and torsion `w`:
/// an exact rotation by `h sqrt(K^2 + W^2)` about the Darboux axis `W t + K b`.
pub fn darboux_step(k: f64, w: f64, h: f64, frame: &Frame) -> Result<Frame> {
    if !(h > 0.0) {
        return Err(BandError::InvalidInput(format!("step must be positive, got {h}")));
    }
    check_frame(frame)?;
    Ok(rotation::orthonormalize(
        &(frame * rotation::exp(&(darboux(k, w) * h))),
    ))
}

/// Integrate the Frenet-Serret equations cell by cell. Positions advance by
/// `h` along the tangent taken at the middle of each cell.
pub fn reconstruct(
    profile: &CurvatureTwistProfile,
    initial_position: &Vector3<f64>,
    initial_frame: &Frame,
) -> Result<FramedCurve> {
    check_frame(initial_frame)?;
    let n = profile.n_nodes();
    let h = profile.spacing();
    let mut positions = Vec::with_capacity(n);
    let mut frames = Vec::with_capacity(n);
    let mut x = *initial_position;
    let mut r = *initial_frame;
    for (&k, &w) in profile.curvature().iter().zip(profile.twist()) {
        positions.push(x);
        frames.push(r);
        let omega = darboux(k, w);
        let half = rotation::exp(&(omega * (0.5 * h)));
        x += (r * half).column(0) * h;
        r = rotation::orthonormalize(&(r * half * half));
    }
    Ok(FramedCurve {
        positions,
        frames,
        end_position: x,
        end_frame: r,
        length: profile.length(),
    })
}

/// Reconstruct with node 0 pinned at the origin with the identity frame.
pub fn reconstruct_gauged(profile: &CurvatureTwistProfile) -> FramedCurve {
    reconstruct(profile, &Vector3::zeros(), &Matrix3::identity())
        .expect("identity frame is orthonormal")
}

pub fn closure(curve: &FramedCurve, closure: Closure) -> ClosureResidual {
    let start = &curve.frames[0];
    let target = closure.target(start);
    ClosureResidual {
        position_gap: curve.end_position - curve.positions[0],
        frame_gap: rotation::log(&(target.transpose() * curve.end_frame)),
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ExtractOptions {
    /// Curvature magnitude below which torsion is treated as undefined.
    /// `None` selects `1e-8 / h`.
    pub k_floor: Option<f64>,
    /// Relative gap (fraction of L) under which the curve is treated as closed.
    pub closed_tol: f64,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        Self {
            k_floor: None,
            closed_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Extraction {
    pub profile: CurvatureTwistProfile,
    /// Cells whose torsion was interpolated because the curvature fell below the floor.
    pub flagged: Vec<bool>,
}

impl Extraction {
    pub fn any_flagged(&self) -> bool {
        self.flagged.iter().any(|&f| f)
    }
}

/// Recover (K, W) from a framed curve.
///
/// Curvature comes from the turning angle between consecutive chords, torsion
/// from the rotation of the chord binormal about the chord between
/// neighbouring nodes. The carried frames only fix the sign of K (binormals are
/// aligned with the frame's `b`). Both are second-order accurate on smooth
/// input with K bounded away from zero.
pub fn extract_profile(curve: &FramedCurve, options: &ExtractOptions) -> Result<Extraction> {
    let n = curve.n_nodes();
    if n < CurvatureTwistProfile::MIN_NODES {
        return Err(BandError::InvalidInput(format!(
            "n_nodes must be ≥ {}, got {n}",
            CurvatureTwistProfile::MIN_NODES
        )));
    }
    let h = curve.spacing();
    let k_floor = options.k_floor.unwrap_or(1e-8 / h);
    let pts = curve.polyline();
    let closed = (curve.end_position - curve.positions[0]).norm() <= options.closed_tol * curve.length;
    let moebius = closed && curve.end_frame.column(2).dot(&curve.frames[0].column(2)) < 0.0;

    let chords: Vec<Vector3<f64>> = (0..n).map(|i| (pts[i + 1] - pts[i]).normalize()).collect();
    let ref_binormal = |i: usize| -> Vector3<f64> {
        if i < n {
            curve.binormal(i)
        } else {
            curve.end_frame.column(2).into_owned()
        }
    };

    // Signed vertex curvature and oriented binormal at nodes 0..=n.
    let mut vk: Vec<Option<f64>> = vec![None; n + 1];
    let mut vb: Vec<Option<Vector3<f64>>> = vec![None; n + 1];
    let mut below: Vec<bool> = vec![false; n + 1];
    for v in 0..=n {
        let (prev, next) = match v {
            0 if closed => (chords[n - 1], chords[0]),
            v if v == n && closed => (chords[n - 1], chords[0]),
            0 => continue,
            v if v == n => continue,
            v => (chords[v - 1], chords[v]),
        };
        let c = prev.cross(&next);
        let angle = c.norm().atan2(prev.dot(&next));
        let mut kappa = angle / h;
        if kappa < k_floor {
            below[v] = true;
            vk[v] = Some(0.0);
            continue;
        }
        let mut b = c.normalize();
        if b.dot(&ref_binormal(v)) < 0.0 {
            b = -b;
            kappa = -kappa;
        }
        vk[v] = Some(kappa);
        vb[v] = Some(b);
    }
    if !closed {
        extrapolate_ends(&mut vk);
    }

    let mut k = vec![0.0; n];
    let mut w: Vec<Option<f64>> = vec![None; n];
    for i in 0..n {
        let (a, b) = (vk[i], vk[i + 1]);
        k[i] = match (a, b) {
            (Some(a), Some(b)) => 0.5 * (a + b),
            (Some(a), None) | (None, Some(a)) => a,
            (None, None) => 0.0,
        };
        if let (Some(b0), Some(b1)) = (vb[i], vb[i + 1]) {
            let theta = b0.cross(&b1).dot(&chords[i]).atan2(b0.dot(&b1));
            w[i] = Some(theta / h);
        }
    }
    if !closed {
        // End cells lack one binormal on open curves; extrapolate them rather than flag.
        let mut tmp = w.clone();
        extrapolate_ends_cells(&mut tmp);
        for i in [0, n - 1] {
            if w[i].is_none() && !below[i] && !below[i + 1] {
                w[i] = tmp[i];
            }
        }
    }
    let flagged: Vec<bool> = w.iter().map(Option::is_none).collect();
    let twist = fill_gaps(&w, closed);
    let profile = CurvatureTwistProfile::new(curve.length, k, twist)?.with_closure(if moebius {
        Closure::Moebius
    } else {
        Closure::Orientable
    });
    Ok(Extraction { profile, flagged })
}

fn extrapolate_ends(v: &mut [Option<f64>]) {
    let n = v.len() - 1;
    if let (Some(a), Some(b)) = (v[1], v[2]) {
        v[0] = Some(2.0 * a - b);
    }
    if let (Some(a), Some(b)) = (v[n - 1], v[n - 2]) {
        v[n] = Some(2.0 * a - b);
    }
}

fn extrapolate_ends_cells(v: &mut [Option<f64>]) {
    let n = v.len();
    if v[0].is_none() {
        if let (Some(a), Some(b)) = (v[1], v[2]) {
            v[0] = Some(2.0 * a - b);
        }
    }
    if v[n - 1].is_none() {
        if let (Some(a), Some(b)) = (v[n - 2], v[n - 3]) {
            v[n - 1] = Some(2.0 * a - b);
        }
    }
}

/// Linear interpolation over missing entries (periodically when `closed`).
fn fill_gaps(values: &[Option<f64>], closed: bool) -> Vec<f64> {
    let n = values.len();
    let known: Vec<usize> = (0..n).filter(|&i| values[i].is_some()).collect();
    if known.is_empty() {
        return vec![0.0; n];
    }
    let get = |i: usize| values[i].unwrap_or(0.0);
    (0..n)
        .map(|i| {
            if let Some(v) = values[i] {
                return v;
            }
            let after = known.iter().copied().find(|&j| j > i);
            let before = known.iter().copied().rev().find(|&j| j < i);
            match (before, after) {
                (Some(a), Some(b)) => {
                    let f = (i - a) as f64 / (b - a) as f64;
                    get(a) + f * (get(b) - get(a))
                }
                (Some(a), None) if closed => {
                    let b = known[0] + n;
                    let f = (i - a) as f64 / (b - a) as f64;
                    get(a) + f * (get(known[0]) - get(a))
                }
                (None, Some(b)) if closed => {
                    let a = *known.last().unwrap();
                    let f = (i + n - a) as f64 / (b + n - a) as f64;
                    get(a) + f * (get(b) - get(a))
                }
                (Some(a), None) => get(a),
                (None, Some(b)) => get(b),
                (None, None) => 0.0,
            }
        })
        .collect()
}

/// Ruling directions of the rectifying developable.
#[derive(Debug, Clone)]
pub struct GeneratorField {
    /// Unit vectors `(W t + K b) / sqrt(K^2 + W^2)` per cell.
    pub directions: Vec<Vector3<f64>>,
    /// Cells where `K^2 + W^2` fell below the floor; those carry `b`.
    pub flat: Vec<bool>,
}

/// Generators per cell. The Darboux axis is fixed by the rotation it
/// generates, so the frame at either end of the cell gives the same vector.
pub fn generator_field(profile: &CurvatureTwistProfile, curve: &FramedCurve) -> Result<GeneratorField> {
    generator_field_with_floor(profile, curve, 1e-8 / profile.spacing())
}

pub fn generator_field_with_floor(
    profile: &CurvatureTwistProfile,
    curve: &FramedCurve,
    floor: f64,
) -> Result<GeneratorField> {
    if profile.n_nodes() != curve.n_nodes() {
        return Err(BandError::InvalidInput(format!(
            "profile has {} cells but curve has {} nodes",
            profile.n_nodes(),
            curve.n_nodes()
        )));
    }
    let mut directions = Vec::with_capacity(profile.n_nodes());
    let mut flat = Vec::with_capacity(profile.n_nodes());
    for (i, (&k, &w)) in profile.curvature().iter().zip(profile.twist()).enumerate() {
        let frame = &curve.frames[i];
        let mag = k.hypot(w);
        if mag < floor {
            directions.push(frame.column(2).into_owned());
            flat.push(true);
        } else {
            directions.push(frame * (darboux(k, w) / mag));
            flat.push(false);
        }
    }
    Ok(GeneratorField { directions, flat })
}

/// Generators flipped to point toward the `+b` edge (`g . b >= 0`). On a
/// Möbius band this orientation reverses after one circuit.
pub fn oriented_generators(profile: &CurvatureTwistProfile, curve: &FramedCurve) -> Result<Vec<Vector3<f64>>> {
    let field = generator_field(profile, curve)?;
    Ok(field
        .directions
        .iter()
        .zip(profile.curvature())
        .map(|(g, &k)| if k < 0.0 { -g } else { *g })
        .collect())
}

/// Triangulated strip `x(s) +- half_width g(s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StripMesh {
    pub vertices: Vec<Vector3<f64>>,
    /// Zero-based vertex indices.
    pub triangles: Vec<[usize; 3]>,
}

/// Node `i` contributes vertices `2i` (on the `-g` edge) and `2i + 1` (on the
/// `+g` edge), with `g` the oriented generator averaged over the two adjacent
/// cells. The strip closes onto node 0; for a Möbius band the orientation of
/// `g` has reversed by then, so the last quad joins each edge to the opposite
/// edge at the start.
pub fn strip_mesh(profile: &CurvatureTwistProfile, curve: &FramedCurve, half_width: f64) -> Result<StripMesh> {
    if !(half_width.is_finite() && half_width > 0.0) {
        return Err(BandError::InvalidInput(format!(
            "display width must be positive, got {half_width}"
        )));
    }
    let n = profile.n_nodes();
    let cells = oriented_generators(profile, curve)?;
    let wrap = profile.closure().odd_wrap_sign();
    let mut vertices = Vec::with_capacity(2 * n);
    for i in 0..n {
        let before = if i == 0 { cells[n - 1] * wrap } else { cells[i - 1] };
        let g = before + cells[i];
        let g = if g.norm() > 0.0 { g.normalize() } else { curve.frames[i].column(2).into_owned() };
        let x = curve.positions[i];
        vertices.push(x - g * half_width);
        vertices.push(x + g * half_width);
    }
    let mut triangles = Vec::with_capacity(2 * n);
    for i in 0..n {
        let (a0, a1) = (2 * i, 2 * i + 1);
        let (b0, b1) = if i + 1 < n {
            (2 * i + 2, 2 * i + 3)
        } else if profile.closure().is_moebius() {
            (1, 0)
        } else {
            (0, 1)
        };
        triangles.push([a0, b0, b1]);
        triangles.push([a0, b1, a1]);
    }
    Ok(StripMesh { vertices, triangles })
}

/// Build a framed curve from raw points: resample to `n` points at uniform
/// arclength and attach discrete Frenet frames whose binormal is kept
/// continuous from node to node (straight stretches inherit the previous frame).
pub fn curve_from_points(points: &[Vector3<f64>], n: usize, closed: bool) -> Result<FramedCurve> {
    if points.len() < 3 {
        return Err(BandError::InvalidInput(format!(
            "need at least 3 points, got {}",
            points.len()
        )));
    }
    if n < CurvatureTwistProfile::MIN_NODES {
        return Err(BandError::InvalidInput(format!(
            "n_nodes must be ≥ {}, got {n}",
            CurvatureTwistProfile::MIN_NODES
        )));
    }
    let mut pts = points.to_vec();
    if closed {
        pts.push(points[0]);
    }
    let mut cum = vec![0.0];
    for w in pts.windows(2) {
        cum.push(cum.last().unwrap() + (w[1] - w[0]).norm());
    }
    let total = *cum.last().unwrap();
    if !(total > 0.0) {
        return Err(BandError::InvalidInput("curve has zero length".into()));
    }
    let sample = |s: f64| -> Vector3<f64> {
        let j = match cum.binary_search_by(|c| c.total_cmp(&s)) {
            Ok(j) => j.min(pts.len() - 2),
            Err(j) => j.saturating_sub(1).min(pts.len() - 2),
        };
        let seg = cum[j + 1] - cum[j];
        let f = if seg > 0.0 { (s - cum[j]) / seg } else { 0.0 };
        pts[j] + (pts[j + 1] - pts[j]) * f
    };
    let mut resampled: Vec<Vector3<f64>> = (0..=n)
        .map(|i| sample(total * i as f64 / n as f64))
        .collect();
    if closed {
        resampled[n] = resampled[0];
    }
    // Chords are only approximately equal after polyline resampling; the
    // length is taken as the resampled polygon's perimeter.
    let length: f64 = resampled.windows(2).map(|w| (w[1] - w[0]).norm()).sum();

    let chord = |i: usize| -> Vector3<f64> {
        let i = if closed { i % n } else { i.min(n - 1) };
        (resampled[i + 1] - resampled[i]).normalize()
    };
    let mut frames = Vec::with_capacity(n + 1);
    let mut prev_b: Option<Vector3<f64>> = None;
    for i in 0..=n {
        let t = if i == 0 && !closed {
            chord(0)
        } else if i == n && !closed {
            chord(n - 1)
        } else {
            let before = if i == 0 { chord(n - 1) } else { chord(i - 1) };
            (before + chord(i)).normalize()
        };
        let before = if i == 0 {
            if closed {
                chord(n - 1)
            } else {
                chord(0)
            }
        } else {
            chord(i - 1)
        };
        let c = before.cross(&chord(i));
        let b = if c.norm() > 1e-12 {
            let mut b = c.normalize();
            if let Some(p) = prev_b {
                if b.dot(&p) < 0.0 {
                    b = -b;
                }
            }
            Some(b)
        } else {
            prev_b
        };
        let b = match b {
            Some(b) => (b - t * t.dot(&b)).normalize(),
            None => any_perpendicular(&t),
        };
        prev_b = Some(b);
        let nrm = b.cross(&t);
        frames.push(Matrix3::from_columns(&[t, nrm, b]));
    }
    let end_frame = frames.pop().unwrap();
    let end_position = resampled[n];
    resampled.truncate(n);
    Ok(FramedCurve {
        positions: resampled,
        frames,
        end_position,
        end_frame,
        length,
    })
}

fn any_perpendicular(t: &Vector3<f64>) -> Vector3<f64> {
    let trial = if t.x.abs() < 0.9 {
        Vector3::x()
    } else {
        Vector3::y()
    };
    (trial - t * t.dot(&trial)).normalize()
}
