//! Anchor-based alignment of the relative map into world coordinates, and
//! the normalized localization error metric.
//!
//! The fitted transform is a full similarity (scale, rotation or
//! reflection, translation) minimizing the summed squared anchor mismatch.
//! In 2-D the optimal orthogonal factor reduces to two closed-form
//! candidates: treat points as complex numbers and correlate the true
//! anchors against the relative anchors (rotation branch) and against
//! their conjugates (reflection branch); the branch with the larger
//! correlation magnitude wins.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::mds::RelativeMap;
use crate::topology::NodePositions;

/// Ratio under which the anchor configuration counts as collinear:
/// smaller singular value of the centered anchor matrix vs the larger.
const DEGENERACY_RATIO: f64 = 1e-8;

/// Similarity transform `p -> scale * rotation * p + translation`.
/// `rotation` is orthogonal with determinant +1 or -1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transform2D {
    pub scale: f64,
    pub rotation: [[f64; 2]; 2],
    pub translation: [f64; 2],
}

impl Transform2D {
    pub fn identity() -> Self {
        Transform2D {
            scale: 1.0,
            rotation: [[1.0, 0.0], [0.0, 1.0]],
            translation: [0.0, 0.0],
        }
    }

    pub fn apply(&self, p: [f64; 2]) -> [f64; 2] {
        let r = &self.rotation;
        [
            self.scale * (r[0][0] * p[0] + r[0][1] * p[1]) + self.translation[0],
            self.scale * (r[1][0] * p[0] + r[1][1] * p[1]) + self.translation[1],
        ]
    }

    pub fn determinant(&self) -> f64 {
        self.rotation[0][0] * self.rotation[1][1] - self.rotation[0][1] * self.rotation[1][0]
    }
}

/// Singular values (descending) of an N x 2 matrix of centered points,
/// via the 2 x 2 Gram matrix closed form.
fn centered_singular_values(points: &[[f64; 2]]) -> [f64; 2] {
    let n = points.len() as f64;
    let cx = points.iter().map(|p| p[0]).sum::<f64>() / n;
    let cy = points.iter().map(|p| p[1]).sum::<f64>() / n;
    let (mut gxx, mut gxy, mut gyy) = (0.0, 0.0, 0.0);
    for p in points {
        let x = p[0] - cx;
        let y = p[1] - cy;
        gxx += x * x;
        gxy += x * y;
        gyy += y * y;
    }
    let trace = gxx + gyy;
    let det = gxx * gyy - gxy * gxy;
    let disc = (trace * trace - 4.0 * det).max(0.0).sqrt();
    let l1 = 0.5 * (trace + disc);
    let l2 = 0.5 * (trace - disc);
    [l1.max(0.0).sqrt(), l2.max(0.0).sqrt()]
}

/// Least-squares similarity transform sending `relative` anchors onto
/// `truth` anchors (reflections permitted). Point lists are paired by index.
pub fn fit_transform(relative: &[[f64; 2]], truth: &[[f64; 2]]) -> Result<Transform2D> {
    if relative.len() != truth.len() {
        return Err(Error::Mismatch(format!(
            "anchor sets differ in size: {} vs {}",
            relative.len(),
            truth.len()
        )));
    }
    let n = relative.len();
    if n < 3 {
        return Err(Error::TooFewAnchors { got: n });
    }
    let sv = centered_singular_values(relative);
    if sv[0] <= 0.0 || sv[1] < DEGENERACY_RATIO * sv[0] {
        return Err(Error::DegenerateAnchors);
    }

    let nf = n as f64;
    let ca = [
        relative.iter().map(|p| p[0]).sum::<f64>() / nf,
        relative.iter().map(|p| p[1]).sum::<f64>() / nf,
    ];
    let cb = [
        truth.iter().map(|p| p[0]).sum::<f64>() / nf,
        truth.iter().map(|p| p[1]).sum::<f64>() / nf,
    ];

    // Complex correlations of the centered sets: rotation branch pairs
    // b against conj(a); reflection branch pairs b against a.
    let (mut rot_re, mut rot_im) = (0.0, 0.0);
    let (mut ref_re, mut ref_im) = (0.0, 0.0);
    let mut denom = 0.0;
    for (a, b) in relative.iter().zip(truth) {
        let ax = a[0] - ca[0];
        let ay = a[1] - ca[1];
        let bx = b[0] - cb[0];
        let by = b[1] - cb[1];
        rot_re += bx * ax + by * ay;
        rot_im += by * ax - bx * ay;
        ref_re += bx * ax - by * ay;
        ref_im += by * ax + bx * ay;
        denom += ax * ax + ay * ay;
    }
    let rot_norm = rot_re.hypot(rot_im);
    let ref_norm = ref_re.hypot(ref_im);

    let (scale, rotation) = if rot_norm >= ref_norm {
        let c = rot_re / rot_norm;
        let s = rot_im / rot_norm;
        (rot_norm / denom, [[c, -s], [s, c]])
    } else {
        let c = ref_re / ref_norm;
        let s = ref_im / ref_norm;
        // conjugate then rotate: (x, y) -> (c x + s y, s x - c y)
        (ref_norm / denom, [[c, s], [s, -c]])
    };
    if scale <= 0.0 || !scale.is_finite() {
        return Err(Error::DegenerateAnchors);
    }

    let rc = [
        rotation[0][0] * ca[0] + rotation[0][1] * ca[1],
        rotation[1][0] * ca[0] + rotation[1][1] * ca[1],
    ];
    Ok(Transform2D {
        scale,
        rotation,
        translation: [cb[0] - scale * rc[0], cb[1] - scale * rc[1]],
    })
}

/// Maps every relative coordinate into world coordinates. Anchor flags are
/// not set; attach them afterwards if an error report is wanted.
pub fn apply_transform(map: &RelativeMap, t: &Transform2D) -> Result<NodePositions> {
    let coords = map.coords().iter().map(|&p| t.apply(p)).collect();
    NodePositions::new(coords)
}

/// Localization quality: per-node displacement of the NON-anchor nodes and
/// the normalized percentage `100 * sum / ((n - N) * R)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub error_percent: f64,
    /// `(node_id, estimated-vs-true distance)` for every non-anchor node.
    pub per_node_errors: Vec<(usize, f64)>,
    pub n: usize,
    pub anchor_count: usize,
    pub radio_range: f64,
}

impl ErrorReport {
    /// Writes a one-row summary CSV.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "n,anchors,R,error_percent")?;
        writeln!(
            w,
            "{},{},{},{}",
            self.n, self.anchor_count, self.radio_range, self.error_percent
        )?;
        Ok(())
    }

    pub fn write_csv_file<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    /// Writes the long-format per-node error table.
    pub fn write_per_node_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "id,error_distance")?;
        for (id, e) in &self.per_node_errors {
            writeln!(w, "{id},{e}")?;
        }
        Ok(())
    }

    pub fn write_per_node_csv_file<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        self.write_per_node_csv(std::fs::File::create(path)?)
    }
}

/// Compares estimated against true positions over non-anchor nodes,
/// normalized by the radio range.
pub fn localization_error(
    estimated: &NodePositions,
    truth: &NodePositions,
    radio_range: f64,
) -> Result<ErrorReport> {
    if estimated.n() != truth.n() {
        return Err(Error::Mismatch(format!(
            "node counts differ: {} vs {}",
            estimated.n(),
            truth.n()
        )));
    }
    if estimated.anchor_ids() != truth.anchor_ids() {
        return Err(Error::Mismatch(
            "estimated and true anchor sets differ".into(),
        ));
    }
    if radio_range <= 0.0 || !radio_range.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "radio_range must be positive, got {radio_range}"
        )));
    }
    let n = truth.n();
    let anchors: &BTreeSet<usize> = truth.anchor_ids();
    let free = n - anchors.len();
    if free == 0 {
        return Err(Error::NoNonAnchorNodes);
    }
    let mut per_node_errors = Vec::with_capacity(free);
    let mut total = 0.0;
    for id in 0..n {
        if anchors.contains(&id) {
            continue;
        }
        let e = estimated.coords()[id];
        let t = truth.coords()[id];
        let dist = (e[0] - t[0]).hypot(e[1] - t[1]);
        total += dist;
        per_node_errors.push((id, dist));
    }
    Ok(ErrorReport {
        error_percent: 100.0 * total / (free as f64 * radio_range),
        per_node_errors,
        n,
        anchor_count: anchors.len(),
        radio_range,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn anchors5() -> Vec<[f64; 2]> {
        vec![[0.0, 0.0], [4.0, 1.0], [2.5, 3.5], [1.0, 2.0], [3.0, 0.5]]
    }

    fn residual(t: &Transform2D, rel: &[[f64; 2]], truth: &[[f64; 2]]) -> f64 {
        rel.iter()
            .zip(truth)
            .map(|(a, b)| {
                let p = t.apply(*a);
                (p[0] - b[0]).powi(2) + (p[1] - b[1]).powi(2)
            })
            .sum::<f64>()
            .sqrt()
    }

    fn assert_orthogonal(t: &Transform2D) {
        let r = &t.rotation;
        for i in 0..2 {
            for j in 0..2 {
                let dot = r[0][i] * r[0][j] + r[1][i] * r[1][j];
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(dot, expect, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn identity_fit() {
        let a = anchors5();
        let t = fit_transform(&a, &a).unwrap();
        assert_abs_diff_eq!(t.scale, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(t.rotation[0][0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(t.rotation[0][1], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(t.translation[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(t.translation[1], 0.0, epsilon = 1e-12);
        assert!(residual(&t, &a, &a) < 1e-9);
        assert_orthogonal(&t);
    }

    #[test]
    fn pure_shift_fit() {
        let rel = anchors5();
        let truth: Vec<[f64; 2]> = rel.iter().map(|p| [p[0] + 5.0, p[1] - 2.0]).collect();
        let t = fit_transform(&rel, &truth).unwrap();
        assert_abs_diff_eq!(t.scale, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(t.translation[0], 5.0, epsilon = 1e-12);
        assert_abs_diff_eq!(t.translation[1], -2.0, epsilon = 1e-12);
        assert!(residual(&t, &rel, &truth) < 1e-9);
    }

    #[test]
    fn rotated_scaled_fit() {
        // relative = true rotated +90 degrees and scaled x2;
        // the fit must undo that: scale 0.5, rotation -90 degrees.
        let truth = anchors5();
        let rel: Vec<[f64; 2]> = truth.iter().map(|p| [-2.0 * p[1], 2.0 * p[0]]).collect();
        let t = fit_transform(&rel, &truth).unwrap();
        assert_abs_diff_eq!(t.scale, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(t.rotation[0][0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(t.rotation[0][1], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(t.rotation[1][0], -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(t.rotation[1][1], 0.0, epsilon = 1e-12);
        assert!(residual(&t, &rel, &truth) < 1e-9);
        assert_abs_diff_eq!(t.determinant(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn reflected_fit() {
        let truth = anchors5();
        let rel: Vec<[f64; 2]> = truth.iter().map(|p| [p[0], -p[1]]).collect();
        let t = fit_transform(&rel, &truth).unwrap();
        assert!(residual(&t, &rel, &truth) < 1e-9);
        assert_abs_diff_eq!(t.determinant(), -1.0, epsilon = 1e-12);
        assert_orthogonal(&t);
    }

    #[test]
    fn degenerate_anchors_rejected() {
        let collinear: Vec<[f64; 2]> = (0..4).map(|i| [i as f64, 2.0 * i as f64]).collect();
        let truth = anchors5()[..4].to_vec();
        assert!(matches!(
            fit_transform(&collinear, &truth),
            Err(Error::DegenerateAnchors)
        ));
        let coincident = vec![[1.0, 1.0]; 4];
        assert!(matches!(
            fit_transform(&coincident, &truth),
            Err(Error::DegenerateAnchors)
        ));
        assert!(matches!(
            fit_transform(&anchors5()[..2], &anchors5()[..2]),
            Err(Error::TooFewAnchors { got: 2 })
        ));
    }

    #[test]
    fn fit_beats_random_transforms() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let rel: Vec<[f64; 2]> = (0..8)
            .map(|_| [rng.random_range(0.0..10.0), rng.random_range(0.0..10.0)])
            .collect();
        let truth: Vec<[f64; 2]> = (0..8)
            .map(|_| [rng.random_range(0.0..10.0), rng.random_range(0.0..10.0)])
            .collect();
        let fitted = fit_transform(&rel, &truth).unwrap();
        let best = residual(&fitted, &rel, &truth);
        for _ in 0..1000 {
            let angle = rng.random_range(0.0..std::f64::consts::TAU);
            let (s, c) = angle.sin_cos();
            let reflect = rng.random_bool(0.5);
            let rotation = if reflect {
                [[c, s], [s, -c]]
            } else {
                [[c, -s], [s, c]]
            };
            let candidate = Transform2D {
                scale: rng.random_range(0.05..4.0),
                rotation,
                translation: [rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0)],
            };
            assert!(
                residual(&candidate, &rel, &truth) >= best * (1.0 - 1e-12),
                "random transform beat the fit"
            );
        }
    }

    #[test]
    fn fit_recovers_random_similarities() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let n = rng.random_range(3usize..12);
            let truth: Vec<[f64; 2]> = (0..n)
                .map(|_| [rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)])
                .collect();
            let sv = centered_singular_values(&truth);
            if sv[1] < 1e-3 * sv[0] {
                continue; // nearly collinear draw; the fit rejects these
            }
            let angle = rng.random_range(0.0..std::f64::consts::TAU);
            let (s, c) = angle.sin_cos();
            let reflect = rng.random_bool(0.5);
            let rotation = if reflect {
                [[c, s], [s, -c]]
            } else {
                [[c, -s], [s, c]]
            };
            let known = Transform2D {
                scale: rng.random_range(0.1..5.0),
                rotation,
                translation: [rng.random_range(-8.0..8.0), rng.random_range(-8.0..8.0)],
            };
            // build the relative set by un-applying: rel = known^{-1}(truth)
            // easier: rel random, truth = known(rel)
            let rel = truth;
            let mapped: Vec<[f64; 2]> = rel.iter().map(|&p| known.apply(p)).collect();
            let fitted = fit_transform(&rel, &mapped).unwrap();
            assert!(
                residual(&fitted, &rel, &mapped) < 1e-9,
                "residual {} for scale {} angle {angle} reflect {reflect}",
                residual(&fitted, &rel, &mapped),
                known.scale
            );
            assert_abs_diff_eq!(fitted.scale, known.scale, epsilon = 1e-9 * known.scale);
        }
    }

    fn positions(coords: Vec<[f64; 2]>, anchors: &[usize]) -> NodePositions {
        NodePositions::with_anchors(coords, anchors.iter().copied().collect()).unwrap()
    }

    #[test]
    fn zero_error_for_identical_positions() {
        let truth = positions(anchors5()[..4].to_vec(), &[0, 1, 2]);
        let report = localization_error(&truth, &truth, 2.0).unwrap();
        assert_eq!(report.error_percent, 0.0);
        assert_eq!(report.per_node_errors, vec![(3, 0.0)]);
    }

    #[test]
    fn single_displaced_node_is_100_percent() {
        let r = 2.0;
        let truth = positions(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]],
            &[0, 1, 2],
        );
        let mut est_coords = truth.coords().to_vec();
        est_coords[3][0] += r;
        let est = positions(est_coords, &[0, 1, 2]);
        let report = localization_error(&est, &truth, r).unwrap();
        assert_abs_diff_eq!(report.error_percent, 100.0, epsilon = 1e-12);
    }

    #[test]
    fn two_half_displaced_nodes_are_50_percent() {
        let r = 2.0;
        let truth = positions(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [2.0, 2.0]],
            &[0, 1, 2],
        );
        let mut est_coords = truth.coords().to_vec();
        est_coords[3][1] += r / 2.0;
        est_coords[4][0] -= r / 2.0;
        let est = positions(est_coords, &[0, 1, 2]);
        let report = localization_error(&est, &truth, r).unwrap();
        assert_abs_diff_eq!(report.error_percent, 50.0, epsilon = 1e-12);
    }

    #[test]
    fn error_is_rigid_motion_invariant() {
        let truth = positions(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.5, 1.5], [2.0, 0.5]],
            &[0, 1, 2],
        );
        let mut est_coords = truth.coords().to_vec();
        est_coords[3] = [1.7, 1.2];
        est_coords[4] = [2.2, 0.9];
        let est = positions(est_coords.clone(), &[0, 1, 2]);
        let base = localization_error(&est, &truth, 2.0).unwrap().error_percent;

        let angle = 0.83f64;
        let (s, c) = angle.sin_cos();
        let motion = |p: [f64; 2]| [c * p[0] - s * p[1] + 3.0, s * p[0] + c * p[1] - 1.0];
        let truth_m = positions(
            truth.coords().iter().map(|&p| motion(p)).collect(),
            &[0, 1, 2],
        );
        let est_m = positions(est_coords.iter().map(|&p| motion(p)).collect(), &[0, 1, 2]);
        let moved = localization_error(&est_m, &truth_m, 2.0)
            .unwrap()
            .error_percent;
        assert_abs_diff_eq!(base, moved, epsilon = 1e-9);
    }

    #[test]
    fn error_scales_inversely_with_radio_range() {
        let truth = positions(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]],
            &[0, 1, 2],
        );
        let mut est_coords = truth.coords().to_vec();
        est_coords[3][0] += 0.7;
        let est = positions(est_coords, &[0, 1, 2]);
        let e1 = localization_error(&est, &truth, 1.0).unwrap().error_percent;
        let e2 = localization_error(&est, &truth, 2.0).unwrap().error_percent;
        assert_abs_diff_eq!(e1, 2.0 * e2, epsilon = 1e-12);
    }

    #[test]
    fn error_requires_matching_inputs() {
        let a = positions(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]],
            &[0, 1, 2],
        );
        let b = positions(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]],
            &[0, 1, 3],
        );
        assert!(matches!(
            localization_error(&a, &b, 1.0),
            Err(Error::Mismatch(_))
        ));
        let all_anchors = positions(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]],
            &[0, 1, 2, 3],
        );
        assert!(matches!(
            localization_error(&all_anchors, &all_anchors, 1.0),
            Err(Error::NoNonAnchorNodes)
        ));
        assert!(localization_error(&a, &a, 0.0).is_err());
    }

    #[test]
    fn report_csv_shape() {
        let truth = positions(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]],
            &[0, 1, 2],
        );
        let report = localization_error(&truth, &truth, 2.0).unwrap();
        let mut buf = Vec::new();
        report.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "n,anchors,R,error_percent\n4,3,2,0\n");
        let mut long = Vec::new();
        report.write_per_node_csv(&mut long).unwrap();
        assert_eq!(String::from_utf8(long).unwrap(), "id,error_distance\n3,0\n");
    }
}
