//! User clustering.
//!
//! Two users may share a beam when, seen from any point of the orbit, they
//! are separated by less than the beamwidth. The proposed clustering grows
//! cliques of that adjacency greedily, always adding the user whose demand
//! profile keeps the cluster's aggregate bandwidth flattest over the window
//! (highest mean-to-peak ratio) while the peak stays under the per-beam cap.
//! The baseline groups users by ground distance only.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    angle_from_orbit, in_fov, max_orbit_angle, satellite_position, slant_range, SatelliteOrbit, SurfacePoint,
};
use crate::optimize::bisect;
use crate::rf_model::free_space_path_loss;
use crate::scalar::Scalar;
use crate::scenario::UserTerminal;

/// Required bandwidth of one user, per slot (Hz).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequiredBwProfile<T> {
    pub per_slot_hz: Vec<T>,
}

impl<T: Scalar> RequiredBwProfile<T> {
    pub fn peak(&self) -> T {
        self.per_slot_hz.iter().fold(T::zero(), |a, &b| a.max(b))
    }
}

/// Link parameters for the worst-case bandwidth estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RequiredBwParams<T> {
    pub beam_power_cap_w: T,
    pub max_gain: T,
    pub rx_gain: T,
    pub noise_psd: T,
    pub carrier_frequency_hz: T,
    pub min_elevation_deg: T,
    pub timeslot_duration_s: T,
    pub num_timeslots: usize,
}

/// Largest, over the slots in which the user sees some satellite, of the
/// distance to the nearest satellite (km). `None` if the user never sees one.
pub fn worst_case_distance<T: Scalar>(
    user: &SurfacePoint<T>,
    sats: &[SatelliteOrbit<T>],
    params: &RequiredBwParams<T>,
) -> Option<T> {
    let mut worst: Option<T> = None;
    for t in 0..params.num_timeslots {
        let time = params.timeslot_duration_s * T::from_count(t);
        let nearest = sats
            .iter()
            .map(|o| satellite_position(o, time))
            .filter(|s| in_fov(s, user, params.min_elevation_deg))
            .map(|s| slant_range(&s, user))
            .fold(None, |m: Option<T>, d| Some(m.map_or(d, |m| m.min(d))));
        if let Some(d) = nearest {
            worst = Some(worst.map_or(d, |w| w.max(d)));
        }
    }
    worst
}

/// Solves `B log2(1 + S / B) = demand` for `B`, where `S` is the received
/// SNR-bandwidth product `P g h / σ²` (Hz). The left side increases with `B`
/// towards `S / ln 2`; demands at or above that have no solution.
pub fn solve_required_bw<T: Scalar>(demand_bps: T, snr_hz: T) -> Option<T> {
    if demand_bps <= T::zero() {
        return Some(T::zero());
    }
    if demand_bps >= snr_hz / T::LN_2() {
        return None;
    }
    let rate = |b: T| b * (snr_hz / b).ln_1p() / T::LN_2();
    let mut hi = demand_bps;
    while rate(hi) < demand_bps {
        hi = hi * T::lit(2.0);
        if !hi.is_finite() {
            return None;
        }
    }
    bisect(|b| rate(b) - demand_bps, T::zero(), hi, hi * T::epsilon())
}

/// Bandwidth user `k` would need in each slot if served at the beam edge
/// (half the peak gain) at full beam power from the worst-case distance.
pub fn required_bw<T: Scalar>(
    user: &UserTerminal<T>,
    sats: &[SatelliteOrbit<T>],
    params: &RequiredBwParams<T>,
) -> Result<RequiredBwProfile<T>> {
    let distance = worst_case_distance(&user.position, sats, params).ok_or(Error::Coverage { user: user.id })?;
    let boundary_gain = params.max_gain / T::lit(2.0);
    let snr_hz = params.beam_power_cap_w
        * boundary_gain
        * free_space_path_loss(distance, params.carrier_frequency_hz)
        * params.rx_gain
        / params.noise_psd;
    let per_slot_hz = user
        .demand_bps
        .iter()
        .enumerate()
        .map(|(t, &d)| solve_required_bw(d, snr_hz).ok_or(Error::DemandUnreachable { user: user.id, slot: t }))
        .collect::<Result<Vec<_>>>()?;
    Ok(RequiredBwProfile { per_slot_hz })
}

/// Symmetric 0/1 matrix of users that fit in one beam.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdjacencyMatrix {
    n: usize,
    entries: Vec<bool>,
}

impl AdjacencyMatrix {
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut entries = vec![false; n * n];
        for k in 0..n {
            for l in 0..n {
                entries[k * n + l] = f(k, l);
            }
        }
        Self { n, entries }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, |k, l| k == l)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, k: usize, l: usize) -> bool {
        self.entries[k * self.n + l]
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|k| (0..k).all(|l| self.get(k, l) == self.get(l, k)))
    }

    pub fn has_unit_diagonal(&self) -> bool {
        (0..self.n).all(|k| self.get(k, k))
    }

    pub fn is_clique(&self, members: &[usize]) -> bool {
        members.iter().all(|&a| members.iter().all(|&b| self.get(a, b)))
    }
}

/// `U[k][l] = 1` iff the largest angle between users `k` and `l` seen from
/// the orbit is below `theta_beam_rad`.
///
/// Pairs are first screened with the angle seen from three orbit points
/// (above each user and above their mid-longitude); any of those reaching
/// the beamwidth already proves the maximum does.
pub fn adjacency_matrix<T: Scalar>(
    users: &[SurfacePoint<T>],
    orbit: &SatelliteOrbit<T>,
    theta_beam_rad: T,
) -> AdjacencyMatrix {
    let n = users.len();
    let ecef: Vec<_> = users.iter().map(|u| u.to_ecef()).collect();
    let radius = orbit.radius_km();
    let upper: Vec<Vec<bool>> = (0..n)
        .into_par_iter()
        .map(|k| {
            ((k + 1)..n)
                .map(|l| {
                    let (a, b) = (&users[k], &users[l]);
                    let (la, lb) = (a.lon_deg.to_radians(), b.lon_deg.to_radians());
                    let mid = (la.sin() + lb.sin()).atan2(la.cos() + lb.cos());
                    let screened = [la, lb, mid]
                        .iter()
                        .any(|&lon| angle_from_orbit(&ecef[k], &ecef[l], radius, lon) >= theta_beam_rad);
                    !screened && max_orbit_angle(a, b, orbit) < theta_beam_rad
                })
                .collect()
        })
        .collect();
    let mut entries = vec![false; n * n];
    for k in 0..n {
        entries[k * n + k] = true;
        for (j, &adj) in upper[k].iter().enumerate() {
            let l = k + 1 + j;
            entries[k * n + l] = adj;
            entries[l * n + k] = adj;
        }
    }
    AdjacencyMatrix { n, entries }
}

/// Mean-to-peak ratio of an aggregate bandwidth profile; 1 for an all-zero
/// profile.
pub fn efficiency_of_total<T: Scalar>(total: &[T]) -> T {
    let peak = total.iter().fold(T::zero(), |a, &b| a.max(b));
    if peak <= T::zero() || total.is_empty() {
        return T::one();
    }
    let sum = total.iter().fold(T::zero(), |a, &b| a + b);
    sum / (T::from_count(total.len()) * peak)
}

/// Time-window matching efficiency of a set of users: the aggregate
/// profile's mean over its peak, in (0, 1].
pub fn efficiency_factor<T: Scalar>(members: &[&RequiredBwProfile<T>]) -> T {
    efficiency_of_total(&summed_profile(members))
}

fn summed_profile<T: Scalar>(members: &[&RequiredBwProfile<T>]) -> Vec<T> {
    let len = members.first().map_or(0, |p| p.per_slot_hz.len());
    let mut total = vec![T::zero(); len];
    for p in members {
        for (acc, &b) in total.iter_mut().zip(&p.per_slot_hz) {
            *acc = *acc + b;
        }
    }
    total
}

/// Proposed greedy clique clustering.
///
/// Users are visited in index order; each user not yet clustered opens a new
/// cluster. Its candidates are its still-unclustered neighbours. While the
/// cluster's peak aggregate bandwidth is below `beam_bw_cap_hz`, the
/// candidate maximizing the efficiency factor of the enlarged cluster
/// (ties to the lowest index) is added, provided the enlarged peak still
/// fits; the candidate set is then intersected with the new member's
/// neighbours. Returns member lists in creation order.
pub fn cluster_users_proposed<T: Scalar>(
    adjacency: &AdjacencyMatrix,
    bw: &[RequiredBwProfile<T>],
    beam_bw_cap_hz: T,
) -> Vec<Vec<usize>> {
    let n = adjacency.len();
    assert_eq!(n, bw.len(), "one profile per user");
    let slots = bw.first().map_or(0, |p| p.per_slot_hz.len());
    let mut live = vec![true; n];
    let mut clusters = Vec::new();

    for k in 0..n {
        if !live[k] {
            continue;
        }
        live[k] = false;
        let mut members = vec![k];
        let mut total = bw[k].per_slot_hz.clone();
        let mut candidates: Vec<usize> = (0..n).filter(|&l| live[l] && adjacency.get(k, l)).collect();
        let mut scratch = vec![T::zero(); slots];

        while peak_of(&total) < beam_bw_cap_hz {
            let mut best: Option<(usize, T)> = None;
            for &l in &candidates {
                for (s, (&a, &b)) in scratch.iter_mut().zip(total.iter().zip(&bw[l].per_slot_hz)) {
                    *s = a + b;
                }
                if peak_of(&scratch) > beam_bw_cap_hz {
                    continue;
                }
                let e = efficiency_of_total(&scratch);
                if best.is_none_or(|(_, be)| e > be) {
                    best = Some((l, e));
                }
            }
            let Some((chosen, _)) = best else { break };
            members.push(chosen);
            live[chosen] = false;
            for (acc, &b) in total.iter_mut().zip(&bw[chosen].per_slot_hz) {
                *acc = *acc + b;
            }
            candidates.retain(|&m| live[m] && adjacency.get(chosen, m));
        }
        clusters.push(members);
    }
    clusters
}

fn peak_of<T: Scalar>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |a, &b| a.max(b))
}

/// Baseline distance clustering: the lowest-index unclustered user leads a
/// new cluster, and unclustered users are added in index order when their
/// great-circle distance to every current member is at most `d_clu_km`.
pub fn cluster_users_baseline<T: Scalar>(users: &[SurfacePoint<T>], d_clu_km: T) -> Vec<Vec<usize>> {
    let n = users.len();
    let mut taken = vec![false; n];
    let mut clusters = Vec::new();
    for leader in 0..n {
        if taken[leader] {
            continue;
        }
        taken[leader] = true;
        let mut members = vec![leader];
        for cand in (leader + 1)..n {
            if taken[cand] {
                continue;
            }
            if members
                .iter()
                .all(|&m| users[m].great_circle_km(&users[cand]) <= d_clu_km)
            {
                taken[cand] = true;
                members.push(cand);
            }
        }
        clusters.push(members);
    }
    clusters
}

/// Footprint diameter of a beam of full width `theta_beam_deg` seen from
/// nadir at `altitude_km`: `2 h tan(θ/2)`.
pub fn cluster_max_distance<T: Scalar>(theta_beam_deg: T, altitude_km: T) -> T {
    T::lit(2.0) * altitude_km * (theta_beam_deg.to_radians() / T::lit(2.0)).tan()
}

/// Beam centre: members' positions averaged with weights `eta + peak
/// demand`, projected back onto the surface.
pub fn beam_center<T: Scalar>(members: &[usize], users: &[UserTerminal<T>], eta_bps: T) -> SurfacePoint<T> {
    assert!(!members.is_empty(), "cluster must have members");
    if members.len() == 1 {
        return users[members[0]].position;
    }
    let mut acc = crate::geometry::EcefVector::default();
    let mut wsum = T::zero();
    for &k in members {
        let w = eta_bps + users[k].peak_demand();
        acc = acc + users[k].position.to_ecef() * w;
        wsum = wsum + w;
    }
    SurfacePoint::from_ecef(&(acc * (T::one() / wsum)))
}

/// A set of users served by one beam.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster<T> {
    pub members: Vec<usize>,
    pub beam_center: SurfacePoint<T>,
    /// Largest aggregate required bandwidth over the window (Hz).
    pub peak_bw_hz: T,
    pub efficiency: T,
    /// Set on singletons whose own peak already exceeds the beam cap.
    pub oversized: bool,
}

/// Attaches beam centres and summary statistics to member lists.
pub fn build_clusters<T: Scalar>(
    member_lists: Vec<Vec<usize>>,
    users: &[UserTerminal<T>],
    bw: &[RequiredBwProfile<T>],
    eta_bps: T,
    beam_bw_cap_hz: T,
) -> Vec<Cluster<T>> {
    member_lists
        .into_iter()
        .map(|mut members| {
            members.sort_unstable();
            let profiles: Vec<_> = members.iter().map(|&k| &bw[k]).collect();
            let total = summed_profile(&profiles);
            let peak = peak_of(&total);
            Cluster {
                beam_center: beam_center(&members, users, eta_bps),
                peak_bw_hz: peak,
                efficiency: efficiency_of_total(&total),
                oversized: peak > beam_bw_cap_hz,
                members,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn prof(v: &[f64]) -> RequiredBwProfile<f64> {
        RequiredBwProfile {
            per_slot_hz: v.to_vec(),
        }
    }

    fn user(id: usize, lat: f64, lon: f64, demand: &[f64]) -> UserTerminal<f64> {
        UserTerminal {
            id,
            position: SurfacePoint::new(lat, lon).unwrap(),
            demand_bps: demand.to_vec(),
        }
    }

    #[test]
    fn efficiency_examples() {
        assert_relative_eq!(efficiency_factor(&[&prof(&[3.0, 3.0, 3.0])]), 1.0);
        assert_relative_eq!(efficiency_factor(&[&prof(&[0.0, 5.0, 0.0, 0.0])]), 0.25);
        assert_eq!(efficiency_factor(&[&prof(&[0.0, 0.0])]), 1.0);

        let n = 24;
        let a: Vec<f64> = (0..n)
            .map(|t| 1.0 + (t as f64 * std::f64::consts::TAU / n as f64).sin())
            .collect();
        let b: Vec<f64> = (0..n)
            .map(|t| 1.0 - (t as f64 * std::f64::consts::TAU / n as f64).sin())
            .collect();
        let (pa, pb) = (prof(&a), prof(&b));
        let ea = efficiency_factor(&[&pa]);
        let eb = efficiency_factor(&[&pb]);
        let eab = efficiency_factor(&[&pa, &pb]);
        assert!(eab > ea && eab > eb);
        assert_relative_eq!(eab, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn identity_adjacency_gives_singletons() {
        let bw: Vec<_> = (0..5).map(|_| prof(&[1.0, 2.0])).collect();
        let c = cluster_users_proposed(&AdjacencyMatrix::identity(5), &bw, 10.0);
        assert_eq!(c, vec![vec![0], vec![1], vec![2], vec![3], vec![4]]);
    }

    #[test]
    fn adjacent_pair_merges_when_it_fits() {
        let u = AdjacencyMatrix::from_fn(2, |_, _| true);
        let bw = vec![prof(&[1.0, 2.0]), prof(&[2.0, 1.0])];
        assert_eq!(cluster_users_proposed(&u, &bw, 3.0), vec![vec![0, 1]]);
        assert_eq!(cluster_users_proposed(&u, &bw, 2.9), vec![vec![0], vec![1]]);
    }

    /// Six users; adjacency: {0,1,2,3} fully connected, 4–5 connected,
    /// 3–4 connected. Cap 10.
    ///
    /// Seed 0, candidates {1,2,3}:
    ///   E(0+1) = 12/(4·4)=0.75 [0+1 = 4,4,2,2]; E(0+2)=(4+3+4+3)/(4·4)=0.875;
    ///   E(0+3) peak 11 > cap, rejected.  → add 2, candidates ∩ N(2) = {1,3}.
    /// Cluster {0,2} = 4,3,4,3. E(+1) = (6+5+4+3)/(4·6) = 0.75; +3 peak 13 rejected.
    ///   → add 1, total 6,5,4,3; candidates ∩ N(1) = {3}; +3 rejected → stop.
    /// Seed 3, candidates {4}: 3+4 = 9,9,9,9 → E=1 → add 4; candidates ∩ N(4) = ∅.
    /// Seed 5 → singleton.
    #[test]
    fn hand_traced_instance() {
        let edges = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3), (4, 5), (3, 4)];
        let u = AdjacencyMatrix::from_fn(6, |a, b| a == b || edges.contains(&(a, b)) || edges.contains(&(b, a)));
        let bw = vec![
            prof(&[2.0, 2.0, 2.0, 2.0]),
            prof(&[2.0, 2.0, 0.0, 0.0]),
            prof(&[2.0, 1.0, 2.0, 1.0]),
            prof(&[9.0, 1.0, 1.0, 1.0]),
            prof(&[0.0, 8.0, 8.0, 8.0]),
            prof(&[5.0, 5.0, 5.0, 5.0]),
        ];
        let c = cluster_users_proposed(&u, &bw, 10.0);
        assert_eq!(c, vec![vec![0, 2, 1], vec![3, 4], vec![5]]);
    }

    #[test]
    fn oversized_singleton_is_flagged() {
        let users = vec![user(0, 0.0, 0.0, &[1.0])];
        let bw = vec![prof(&[20.0])];
        let lists = cluster_users_proposed(&AdjacencyMatrix::identity(1), &bw, 10.0);
        let c = build_clusters(lists, &users, &bw, 1.0, 10.0);
        assert!(c[0].oversized);
    }

    #[test]
    fn baseline_examples() {
        let pts: Vec<_> = (0..4).map(|i| SurfacePoint::new(0.0, i as f64).unwrap()).collect();
        let singles = cluster_users_baseline(&pts, 1e-9);
        assert_eq!(singles.len(), 4);

        let a = SurfacePoint::<f64>::new(0.0, 0.0).unwrap();
        let b = a.offset_km(0.0, 100.0);
        assert!((a.great_circle_km(&b) - 100.0).abs() < 1e-6);
        assert_eq!(cluster_users_baseline(&[a, b], 275.81), vec![vec![0, 1]]);
    }

    /// Points along the equator 100 km apart, d = 250 km: leader 0 takes 1, 2
    /// (200 km) but not 3; leader 3 takes 4, 5.
    #[test]
    fn baseline_leader_trace() {
        let o = SurfacePoint::new(0.0, 0.0).unwrap();
        let pts: Vec<_> = (0..6).map(|i| o.offset_km(0.0, 100.0 * i as f64)).collect();
        assert_eq!(cluster_users_baseline(&pts, 250.0), vec![vec![0, 1, 2], vec![3, 4, 5]]);
    }

    #[test]
    fn cluster_distance_examples() {
        assert!((cluster_max_distance(1.96f64, 8062.0) - 275.81).abs() < 0.5);
        assert!((cluster_max_distance(5.88f64, 8062.0) - 828.09).abs() < 0.5);
        assert_relative_eq!(
            cluster_max_distance(2.0f64, 16124.0),
            2.0 * cluster_max_distance(2.0f64, 8062.0),
            max_relative = 1e-12
        );
    }

    #[test]
    fn beam_center_examples() {
        let users = vec![
            user(0, 10.0, 20.0, &[5.0]),
            user(1, 10.0, 22.0, &[5.0]),
            user(2, 12.0, 20.0, &[3.0]),
        ];
        assert_eq!(beam_center(&[0], &users, 1.0), users[0].position);

        let mid = beam_center(&[0, 1], &users, 1.0);
        let (d0, d1) = (
            mid.great_circle_km(&users[0].position),
            mid.great_circle_km(&users[1].position),
        );
        assert_relative_eq!(d0, d1, max_relative = 1e-9);

        // Weights 3:1 (eta = 0, peaks 3 and 1): direct evaluation.
        let w = vec![user(0, 0.0, 0.0, &[3.0]), user(1, 0.0, 4.0, &[1.0])];
        let c = beam_center(&[0, 1], &w, 0.0);
        let v = (w[0].position.to_ecef() * 3.0 + w[1].position.to_ecef() * 1.0) * 0.25;
        let expect = SurfacePoint::from_ecef(&v);
        assert_relative_eq!(c.lon_deg, expect.lon_deg, epsilon = 1e-12);
        assert!(c.lon_deg < 2.0 && c.lon_deg > 0.0);
        assert!(c.lat_deg.abs() < 1e-12);
    }

    #[test]
    fn required_bw_inverts_rate() {
        let s: f64 = 2.5e10;
        for &d in &[1e5, 1e7, 2e8, 3e9] {
            let b = solve_required_bw(d, s).unwrap();
            let rate = b * (1.0 + s / b).log2();
            assert_relative_eq!(rate, d, max_relative = 1e-9);
        }
        assert_eq!(solve_required_bw(0.0, s), Some(0.0));
        assert!(solve_required_bw(s, s).is_some());
        assert!(solve_required_bw(s / std::f64::consts::LN_2, s).is_none());
    }

    #[test]
    fn required_bw_more_than_doubles_with_demand() {
        // Grid-search oracle for the implicit equation.
        let s = 2.5e10;
        let grid_root = |d: f64| {
            let mut best = (f64::INFINITY, 0.0);
            for i in 0..200_000 {
                let b = 1e6 * (1.0 + i as f64 * 0.005);
                let err = (b * (1.0 + s / b).log2() - d).abs();
                if err < best.0 {
                    best = (err, b);
                }
            }
            best.1
        };
        let (d1, d2) = (2e8, 4e8);
        let (b1, b2) = (solve_required_bw(d1, s).unwrap(), solve_required_bw(d2, s).unwrap());
        assert!((b1 - grid_root(d1)).abs() < 1e4);
        assert!((b2 - grid_root(d2)).abs() < 1e4);
        assert!(b2 > 2.0 * b1);
    }

    #[test]
    fn adjacency_examples() {
        let orbit = SatelliteOrbit::new(0.0, 8062.0, 0.0).unwrap();
        let theta = 1.96f64.to_radians();
        let pts = vec![
            SurfacePoint::new(10.0, 10.0).unwrap(),
            SurfacePoint::new(10.0, 10.0).unwrap(),
            SurfacePoint::new(10.0, 100.0).unwrap(),
            SurfacePoint::new(10.5, 10.3).unwrap(),
        ];
        let u = adjacency_matrix(&pts, &orbit, theta);
        assert!(u.get(0, 1) && u.get(1, 0));
        assert!(!u.get(0, 2));
        assert!(u.is_symmetric() && u.has_unit_diagonal());
        assert_eq!(u.get(0, 3), max_orbit_angle(&pts[0], &pts[3], &orbit) < theta);
    }
}
