//! Geometry of a converged band near its singular point.
//!
//! The singular point X is where the curvature changes sign. There the
//! generator angle `phi`, with `tan phi = W / K`, should approach 45 degrees
//! from both sides, the band should be symmetric under a half turn about an
//! axis through X along the binormal, and the two generators bounding X
//! should span a flat right triangle.

use std::fmt::Write as _;

use nalgebra::{Matrix3, Vector3};

use crate::error::{BandError, Result};
use crate::geometry::{generator_field, CurvatureTwistProfile, FramedCurve};
use crate::io::fmt_real;
use crate::statics::{DEFAULT_MASK_WINDOW, MIN_MASK_HALF_CELLS};

/// Ratio of `min(K^2 + W^2)` to its maximum below which a profile without a
/// sign change of K is still taken to have a singular point.
pub const MIN_RATIO_FOR_SINGULAR: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Detection {
    /// K changes sign between two cells.
    SignChange,
    /// No sign change; the minimum of `K^2 + W^2` is nearly zero.
    Minimum,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SingularPoint {
    pub s: f64,
    pub detection: Detection,
    /// K and W on the cells either side of X.
    pub k_left: f64,
    pub k_right: f64,
    pub w_left: f64,
    pub w_right: f64,
    /// Every location that qualified; `s` is the first.
    pub candidates: Vec<f64>,
}

/// Where `K^2 + W^2` is smallest and how small it gets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MagnitudeMinimum {
    pub s: f64,
    pub min_value: f64,
    pub max_value: f64,
}

impl MagnitudeMinimum {
    pub fn ratio(&self) -> f64 {
        self.min_value / self.max_value
    }
}

fn magnitudes(profile: &CurvatureTwistProfile) -> Vec<f64> {
    profile
        .curvature()
        .iter()
        .zip(profile.twist())
        .map(|(k, w)| k * k + w * w)
        .collect()
}

/// Grid minimum of `K^2 + W^2`, refined by a parabola through the
/// neighbouring samples.
pub fn magnitude_minimum(profile: &CurvatureTwistProfile) -> MagnitudeMinimum {
    let m = magnitudes(profile);
    let n = m.len();
    let h = profile.spacing();
    let (i, &lo) = m
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty profile");
    let hi = m.iter().copied().fold(0.0, f64::max);
    let (a, c) = (m[(i + n - 1) % n], m[(i + 1) % n]);
    let curv = a - 2.0 * lo + c;
    let (offset, value) = if curv > 0.0 {
        let d = 0.5 * (a - c) / curv;
        (d, (lo - 0.25 * (a - c) * d).max(0.0))
    } else {
        (0.0, lo)
    };
    MagnitudeMinimum {
        s: (profile.arclength(i) + offset * h).rem_euclid(profile.length()),
        min_value: value,
        max_value: hi,
    }
}

fn cell_at_or_before(profile: &CurvatureTwistProfile, s: f64) -> usize {
    let n = profile.n_nodes();
    let x = s / profile.spacing() - 0.5;
    (x.floor() as isize).rem_euclid(n as isize) as usize
}

pub fn find_singular_point(profile: &CurvatureTwistProfile) -> Result<SingularPoint> {
    let n = profile.n_nodes();
    let wrap = profile.closure().odd_wrap_sign();
    let k_at = |j: usize| {
        if j < n {
            profile.curvature()[j]
        } else {
            wrap * profile.curvature()[j - n]
        }
    };
    let sides = |s: f64| {
        let i = cell_at_or_before(profile, s);
        (
            profile.curvature()[i],
            k_at(i + 1),
            profile.twist()[i],
            profile.twist()[(i + 1) % n],
        )
    };
    let crossings = profile.curvature_sign_changes();
    if let Some(&s) = crossings.first() {
        let (k_left, k_right, w_left, w_right) = sides(s);
        return Ok(SingularPoint {
            s,
            detection: Detection::SignChange,
            k_left,
            k_right,
            w_left,
            w_right,
            candidates: crossings,
        });
    }
    let min = magnitude_minimum(profile);
    if min.ratio() > MIN_RATIO_FOR_SINGULAR {
        return Err(BandError::NoSingularPoint {
            min_value: min.min_value,
            max_value: min.max_value,
        });
    }
    let m = magnitudes(profile);
    let floor = min.min_value + MIN_RATIO_FOR_SINGULAR * min.max_value;
    let candidates: Vec<f64> = (0..n)
        .filter(|&i| m[i] <= floor && m[i] <= m[(i + n - 1) % n] && m[i] <= m[(i + 1) % n])
        .map(|i| profile.arclength(i))
        .collect();
    let (k_left, k_right, w_left, w_right) = sides(min.s);
    Ok(SingularPoint {
        s: min.s,
        detection: Detection::Minimum,
        k_left,
        k_right,
        w_left,
        w_right,
        candidates,
    })
}

/// `atan2(|W|, |K|)` in degrees; `None` where `K = W = 0`.
pub fn phi_field(profile: &CurvatureTwistProfile) -> Vec<Option<f64>> {
    profile
        .curvature()
        .iter()
        .zip(profile.twist())
        .map(|(&k, &w)| (k != 0.0 || w != 0.0).then(|| w.abs().atan2(k.abs()).to_degrees()))
        .collect()
}

/// `atan2(W, K)` in degrees, for plotting.
pub fn phi_signed(profile: &CurvatureTwistProfile) -> Vec<Option<f64>> {
    profile
        .curvature()
        .iter()
        .zip(profile.twist())
        .map(|(&k, &w)| (k != 0.0 || w != 0.0).then(|| w.atan2(k).to_degrees()))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiLimit {
    pub left: f64,
    pub right: f64,
    /// Mean of the two one-sided limits, degrees.
    pub mean: f64,
    /// `|left - right|`.
    pub spread: f64,
}

/// Half-width of the core window excluded around X.
pub fn core_radius(profile: &CurvatureTwistProfile) -> f64 {
    (0.5 * DEFAULT_MASK_WINDOW * profile.length()).max(MIN_MASK_HALF_CELLS * profile.spacing())
}

/// Least-squares line through `(x, y)`, evaluated at 0.
fn intercept(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    my - mx * sxy / sxx
}

/// One-sided linear extrapolations of `phi` to `s_x` from samples between
/// `core_radius` and `core_radius + fit_width` on each side.
pub fn phi_limit_at_x(profile: &CurvatureTwistProfile, s_x: f64, fit_width: f64) -> Result<PhiLimit> {
    let l = profile.length();
    let core = core_radius(profile);
    let phi = phi_field(profile);
    let mut left = Vec::new();
    let mut right = Vec::new();
    for (i, s) in profile.arclengths().into_iter().enumerate() {
        let d = (s - s_x + 0.5 * l).rem_euclid(l) - 0.5 * l;
        if d.abs() <= core || d.abs() > core + fit_width {
            continue;
        }
        if let Some(p) = phi[i] {
            if d < 0.0 {
                left.push((d, p));
            } else {
                right.push((d, p));
            }
        }
    }
    let available = left.len().min(right.len());
    if available < 3 {
        return Err(BandError::WindowTooSmall { available });
    }
    let (a, b) = (intercept(&left), intercept(&right));
    Ok(PhiLimit {
        left: a,
        right: b,
        mean: 0.5 * (a + b),
        spread: (a - b).abs(),
    })
}

/// Default width of the fitting window on each side of the core.
pub fn default_fit_width(profile: &CurvatureTwistProfile) -> f64 {
    (0.05 * profile.length()).max(8.0 * profile.spacing())
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct WZeros {
    /// Sign changes of W, sorted by arclength.
    pub crossings: Vec<f64>,
    /// Zeros where W returns to its previous sign.
    pub touching: Vec<f64>,
    /// W vanishes identically.
    pub degenerate: bool,
}

impl WZeros {
    pub fn count(&self) -> usize {
        self.crossings.len()
    }
}

pub fn count_w_zeros(profile: &CurvatureTwistProfile) -> WZeros {
    let w = profile.twist();
    let n = w.len();
    let h = profile.spacing();
    let l = profile.length();
    let Some(start) = w.iter().position(|&v| v != 0.0) else {
        return WZeros {
            degenerate: true,
            ..Default::default()
        };
    };
    let mut out = WZeros::default();
    let mut prev = start;
    for step in 1..=n {
        let j = (start + step) % n;
        if w[j] == 0.0 {
            continue;
        }
        // Cells strictly between `prev` and `j` (cyclically) are exact zeros.
        let gap = (j + n - prev) % n;
        let gap = if gap == 0 { n } else { gap };
        let s_prev = profile.arclength(prev);
        let location = if gap == 1 {
            s_prev + h * w[prev] / (w[prev] - w[j])
        } else {
            s_prev + 0.5 * gap as f64 * h
        };
        let location = location.rem_euclid(l);
        if (w[prev] < 0.0) != (w[j] < 0.0) {
            out.crossings.push(location);
        } else if gap > 1 {
            out.touching.push(location);
        }
        prev = j;
    }
    out.crossings.sort_by(f64::total_cmp);
    out.touching.sort_by(f64::total_cmp);
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymmetryAxis {
    /// Centroid of the nodes; the axis passes through it.
    pub point: Vector3<f64>,
    pub direction: Vector3<f64>,
    pub rms: f64,
    /// Node parameter offset of the best matching.
    pub offset: f64,
    /// The half turn reverses the direction of travel along the midline.
    pub reversing: bool,
    /// An axis at a large angle fits about as well, so the axis is not unique.
    pub degenerate: bool,
    /// Arclengths where the axis meets the midline, with `|b . axis|` there.
    pub intersections: Vec<(f64, f64)>,
}

impl SymmetryAxis {
    /// The intersection where the binormal is most nearly along the axis.
    pub fn binormal_intersection(&self) -> Option<f64> {
        self.intersections
            .iter()
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .map(|x| x.0)
    }
}

struct Matcher<'a> {
    nodes: &'a [Vector3<f64>],
    centroid: Vector3<f64>,
}

impl Matcher<'_> {
    fn at(&self, t: f64) -> Vector3<f64> {
        let n = self.nodes.len();
        let t = t.rem_euclid(n as f64);
        let i = t.floor() as usize % n;
        let f = t - t.floor();
        self.nodes[i] * (1.0 - f) + self.nodes[(i + 1) % n] * f
    }

    fn rms(&self, axis: &Vector3<f64>, offset: f64, reversing: bool) -> f64 {
        let rot = 2.0 * axis * axis.transpose() - Matrix3::identity();
        let n = self.nodes.len();
        let sum: f64 = (0..n)
            .map(|i| {
                let image = rot * (self.nodes[i] - self.centroid) + self.centroid;
                let t = if reversing { offset - i as f64 } else { offset + i as f64 };
                (image - self.at(t)).norm_squared()
            })
            .sum();
        (sum / n as f64).sqrt()
    }

    fn best_integer_offset(&self, axis: &Vector3<f64>) -> (f64, bool, f64) {
        let n = self.nodes.len();
        let mut best = (f64::INFINITY, false, 0.0);
        for reversing in [true, false] {
            for m in 0..n {
                let r = self.rms(axis, m as f64, reversing);
                if r < best.0 {
                    best = (r, reversing, m as f64);
                }
            }
        }
        best
    }
}

fn unit_from_angles(theta: f64, phi: f64) -> Vector3<f64> {
    Vector3::new(theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos())
}

/// Best half-turn symmetry of a closed midline.
pub fn fit_symmetry_axis(curve: &FramedCurve) -> SymmetryAxis {
    let nodes = &curve.positions;
    let n = nodes.len();
    let centroid = nodes.iter().sum::<Vector3<f64>>() / n as f64;
    let matcher = Matcher {
        nodes,
        centroid,
    };

    // Coarse grid over the upper hemisphere.
    let mut best = (f64::INFINITY, true, 0.0, 0.0, 0.0);
    let rings = 12;
    for a in 0..=rings {
        let theta = 0.5 * std::f64::consts::PI * a as f64 / rings as f64;
        let count = if a == 0 { 1 } else { (4 * a).max(4) };
        for b in 0..count {
            let phi = 2.0 * std::f64::consts::PI * b as f64 / count as f64;
            let axis = unit_from_angles(theta, phi);
            let (r, rev, m) = matcher.best_integer_offset(&axis);
            if r < best.0 {
                best = (r, rev, m, theta, phi);
            }
        }
    }

    // Pattern search over (theta, phi, offset), re-checking neighbouring
    // integer offsets as the axis moves.
    let (mut rms, reversing, mut offset, mut theta, mut phi) = best;
    let mut step = [0.1, 0.1, 0.5];
    while step[0] > 1e-9 {
        let mut improved = false;
        for dim in 0..3 {
            for sign in [-1.0, 1.0] {
                let mut trial = [theta, phi, offset];
                trial[dim] += sign * step[dim];
                let r = matcher.rms(&unit_from_angles(trial[0], trial[1]), trial[2], reversing);
                if r < rms {
                    rms = r;
                    theta = trial[0];
                    phi = trial[1];
                    offset = trial[2];
                    improved = true;
                }
            }
        }
        if !improved {
            step.iter_mut().for_each(|s| *s *= 0.5);
        }
    }
    let direction = unit_from_angles(theta, phi);
    let offset = offset.rem_euclid(n as f64);

    let diameter = curve.diameter().max(f64::MIN_POSITIVE);
    let helper = if direction.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
    let e1 = direction.cross(&helper).normalize();
    let e2 = direction.cross(&e1);
    let degenerate = [e1, e2, (e1 + e2).normalize()].iter().any(|axis| {
        matcher.best_integer_offset(axis).0 <= 2.0 * rms + 1e-3 * diameter
    });

    let h = curve.spacing();
    let intersections = if reversing {
        [0.5 * offset, 0.5 * offset + 0.5 * n as f64]
            .iter()
            .map(|&t| {
                let t = t.rem_euclid(n as f64);
                let i = t.round() as usize % n;
                let b = curve.frames[i].column(2);
                (t * h, b.dot(&direction).abs())
            })
            .collect()
    } else {
        Vec::new()
    };
    SymmetryAxis {
        point: centroid,
        direction,
        rms,
        offset,
        reversing,
        degenerate,
        intersections,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TriangleReport {
    pub apex: f64,
    /// Angles of the two bounding generators to `b` at X, measured in the
    /// rectifying plane, degrees in `(-90, 90]`.
    pub leg_angles: [f64; 2],
    /// Angle between the two legs, degrees in `[0, 90]`.
    pub opening: f64,
    /// Arclength interval whose ends carry the legs.
    pub flat_window: (f64, f64),
    /// Largest distance of the patch points from their best-fit plane.
    pub flatness: f64,
    /// Diameter of the patch point set.
    pub patch_size: f64,
}

fn fold_angle(deg: f64) -> f64 {
    let a = (deg + 90.0).rem_euclid(180.0) - 90.0;
    if a <= -90.0 {
        a + 180.0
    } else {
        a
    }
}

/// Generators bounding the core window around X and the flatness of the
/// ruled patch between them.
pub fn triangle_report(profile: &CurvatureTwistProfile, curve: &FramedCurve, s_x: f64) -> Result<TriangleReport> {
    let n = profile.n_nodes();
    let h = profile.spacing();
    let l = profile.length();
    let r = core_radius(profile);
    let field = generator_field(profile, curve)?;
    let cell = |s: f64| cell_at_or_before(profile, s.rem_euclid(l) + 0.5 * h);
    let (i_left, i_right) = (cell(s_x - r), cell(s_x + r));
    let node_x = ((s_x / h).round() as usize) % n;
    let frame_x = curve.frames[node_x];
    let (t_x, b_x) = (frame_x.column(0), frame_x.column(2));
    let angle = |g: &Vector3<f64>| fold_angle(g.dot(&t_x).atan2(g.dot(&b_x)).to_degrees());
    let (g_left, g_right) = (field.directions[i_left], field.directions[i_right]);
    let leg_angles = [angle(&g_left), angle(&g_right)];
    let opening = g_left.dot(&g_right).abs().min(1.0).acos().to_degrees();

    // Patch: midline nodes in the window plus the far ends of both legs.
    let mut points = Vec::new();
    let mut j = i_left;
    loop {
        points.push(curve.positions[j]);
        if j == (i_right + 1) % n {
            break;
        }
        j = (j + 1) % n;
    }
    let leg = r;
    for (i, g) in [(i_left, g_left), (i_right, g_right)] {
        let base = 0.5 * (curve.positions[i] + curve.positions[(i + 1) % n]);
        points.push(base + g * leg);
        points.push(base - g * leg);
    }
    let centroid = points.iter().sum::<Vector3<f64>>() / points.len() as f64;
    let cov = points
        .iter()
        .map(|p| (p - centroid) * (p - centroid).transpose())
        .sum::<Matrix3<f64>>();
    let eig = cov.symmetric_eigen();
    let k = eig.eigenvalues.imin();
    let normal = eig.eigenvectors.column(k).into_owned();
    let flatness = points.iter().map(|p| (p - centroid).dot(&normal).abs()).fold(0.0, f64::max);
    let patch_size = points
        .iter()
        .flat_map(|a| points.iter().map(move |b| (a - b).norm()))
        .fold(0.0, f64::max);
    Ok(TriangleReport {
        apex: s_x,
        leg_angles,
        opening,
        flat_window: ((s_x - r).rem_euclid(l), (s_x + r).rem_euclid(l)),
        flatness,
        patch_size,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisReport {
    pub singular: Option<SingularPoint>,
    pub minimum: MagnitudeMinimum,
    pub phi_limit: Option<PhiLimit>,
    pub w_zeros: WZeros,
    pub symmetry: SymmetryAxis,
    pub triangle: Option<TriangleReport>,
    /// Why the X-dependent parts are missing, if they are.
    pub notes: Vec<String>,
}

pub fn analyze(profile: &CurvatureTwistProfile, curve: &FramedCurve) -> Result<AnalysisReport> {
    let mut notes = Vec::new();
    let singular = match find_singular_point(profile) {
        Ok(x) => Some(x),
        Err(e @ BandError::NoSingularPoint { .. }) => {
            notes.push(e.to_string());
            None
        }
        Err(e) => return Err(e),
    };
    let phi_limit = match &singular {
        Some(x) => match phi_limit_at_x(profile, x.s, default_fit_width(profile)) {
            Ok(p) => Some(p),
            Err(e) => {
                notes.push(e.to_string());
                None
            }
        },
        None => None,
    };
    let triangle = match &singular {
        Some(x) => Some(triangle_report(profile, curve, x.s)?),
        None => None,
    };
    Ok(AnalysisReport {
        minimum: magnitude_minimum(profile),
        w_zeros: count_w_zeros(profile),
        symmetry: fit_symmetry_axis(curve),
        singular,
        phi_limit,
        triangle,
        notes,
    })
}

impl AnalysisReport {
    /// `(key, value)` pairs; absent quantities are written as `nan`.
    pub fn entries(&self) -> Vec<(String, String)> {
        let nan = || "nan".to_string();
        let f = |x: f64| fmt_real(x);
        let mut out: Vec<(String, String)> = Vec::new();
        let mut push = |k: &str, v: String| out.push((k.to_string(), v));
        match &self.singular {
            Some(x) => {
                push("s_X", f(x.s));
                push("detection", format!("{:?}", x.detection));
                push("K_left_of_X", f(x.k_left));
                push("K_right_of_X", f(x.k_right));
                push("W_left_of_X", f(x.w_left));
                push("W_right_of_X", f(x.w_right));
                push("candidates", x.candidates.len().to_string());
            }
            None => push("s_X", nan()),
        }
        push("min_K2W2", f(self.minimum.min_value));
        push("max_K2W2", f(self.minimum.max_value));
        push("min_ratio", f(self.minimum.ratio()));
        push("s_min_K2W2", f(self.minimum.s));
        match &self.phi_limit {
            Some(p) => {
                push("phi_limit_deg", f(p.mean));
                push("phi_left_deg", f(p.left));
                push("phi_right_deg", f(p.right));
                push("phi_spread_deg", f(p.spread));
            }
            None => push("phi_limit_deg", nan()),
        }
        push("w_sign_changes", self.w_zeros.count().to_string());
        push(
            "w_zero_crossings",
            self.w_zeros.crossings.iter().map(|s| f(*s)).collect::<Vec<_>>().join(" "),
        );
        push("w_touching_zeros", self.w_zeros.touching.len().to_string());
        push("w_degenerate", self.w_zeros.degenerate.to_string());
        let a = &self.symmetry;
        push("axis_point", format!("{} {} {}", f(a.point.x), f(a.point.y), f(a.point.z)));
        push(
            "axis_direction",
            format!("{} {} {}", f(a.direction.x), f(a.direction.y), f(a.direction.z)),
        );
        push("axis_rms", f(a.rms));
        push("axis_reversing", a.reversing.to_string());
        push("axis_degenerate", a.degenerate.to_string());
        push(
            "axis_binormal_intersection",
            a.binormal_intersection().map_or_else(nan, f),
        );
        match &self.triangle {
            Some(t) => {
                push("triangle_leg_left_deg", f(t.leg_angles[0]));
                push("triangle_leg_right_deg", f(t.leg_angles[1]));
                push("triangle_opening_deg", f(t.opening));
                push("triangle_window", format!("{} {}", f(t.flat_window.0), f(t.flat_window.1)));
                push("triangle_flatness", f(t.flatness));
                push("triangle_patch_size", f(t.patch_size));
            }
            None => push("triangle_leg_left_deg", nan()),
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.entries() {
            let _ = writeln!(out, "{k}: {v}");
        }
        for note in &self.notes {
            let _ = writeln!(out, "note: {note}");
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("key,value\n");
        for (k, v) in self.entries() {
            let _ = writeln!(out, "{k},{v}");
        }
        out
    }
}
