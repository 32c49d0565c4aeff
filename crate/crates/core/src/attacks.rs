//! Attack sampling, recovery checks and zone-knowledge sharing.

use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::linalg::Vec2;
use crate::zones::{
    attack_probability, comm_margin, direct_jam_condition, sensing_margin, CommZone, Confidence, DangerZone,
    SensingZone, ZoneId,
};
use crate::Result;

/// Slack on the attack-attempt schedule so `step * dt * freq` landing a hair
/// below an integer still counts.
const SCHEDULE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttackKind {
    Sensing,
    Comm,
    DirectJam,
}

impl AttackKind {
    /// Whether the attack disables the radio (comm or direct jam).
    pub fn hits_comm(self) -> bool {
        !matches!(self, AttackKind::Sensing)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            AttackKind::Sensing => "sensing",
            AttackKind::Comm => "comm",
            AttackKind::DirectJam => "direct-jam",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttackEvent {
    pub step: usize,
    pub robot: usize,
    pub zone: ZoneId,
    pub kind: AttackKind,
    pub recovered_at: Option<usize>,
}

impl AttackEvent {
    pub fn is_active(&self) -> bool {
        self.recovered_at.is_none()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RobotStatus {
    pub sensing_ok: bool,
    pub comm_ok: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StatusState {
    Healthy,
    SensingLost,
    CommLost,
    BothLost,
}

impl Default for RobotStatus {
    fn default() -> Self {
        RobotStatus {
            sensing_ok: true,
            comm_ok: true,
        }
    }
}

impl RobotStatus {
    pub fn state(&self) -> StatusState {
        match (self.sensing_ok, self.comm_ok) {
            (true, true) => StatusState::Healthy,
            (false, true) => StatusState::SensingLost,
            (true, false) => StatusState::CommLost,
            (false, false) => StatusState::BothLost,
        }
    }
}

/// All danger zones of a scenario, kept sorted by id.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ZoneSet {
    pub sensing: Vec<SensingZone>,
    pub comm: Vec<CommZone>,
}

#[derive(Debug, Clone, Copy)]
pub enum ZoneRef<'a> {
    Sensing(&'a SensingZone),
    Comm(&'a CommZone),
}

impl ZoneSet {
    pub fn new(mut sensing: Vec<SensingZone>, mut comm: Vec<CommZone>) -> Self {
        sensing.sort_by_key(|z| z.id);
        comm.sort_by_key(|z| z.id);
        ZoneSet { sensing, comm }
    }

    pub fn sensing(&self, id: ZoneId) -> Option<&SensingZone> {
        self.sensing.iter().find(|z| z.id == id)
    }

    pub fn comm(&self, id: ZoneId) -> Option<&CommZone> {
        self.comm.iter().find(|z| z.id == id)
    }

    /// Every zone in ascending id order.
    pub fn ordered(&self) -> Vec<ZoneRef<'_>> {
        let mut all: Vec<ZoneRef<'_>> = self
            .sensing
            .iter()
            .map(ZoneRef::Sensing)
            .chain(self.comm.iter().map(ZoneRef::Comm))
            .collect();
        all.sort_by_key(|z| match z {
            ZoneRef::Sensing(s) => s.id,
            ZoneRef::Comm(c) => c.id,
        });
        all
    }

    pub fn len(&self) -> usize {
        self.sensing.len() + self.comm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// True on steps where `floor(t * freq)` increments, `t = step * dt`.
pub fn attack_attempt(step: usize, dt: f64, freq: f64) -> bool {
    if step == 0 {
        return false;
    }
    let now = (step as f64 * dt * freq + SCHEDULE_EPS).floor();
    let before = ((step - 1) as f64 * dt * freq + SCHEDULE_EPS).floor();
    now > before
}

/// A robot as seen by the attack sampler.
#[derive(Debug, Clone, Copy)]
pub struct Exposure {
    pub position: Vec2,
    pub status: RobotStatus,
    /// Distance to the farthest group member; `None` when not in the group.
    pub c_star: Option<f64>,
}

/// Sample this step's attacks.
///
/// Zones attempt attacks on their own schedule. On an attempt every robot
/// consumes exactly one uniform draw, in (zone id, robot id) order, whether
/// or not it can still be hurt, so event streams only depend on the seed.
/// Attacks only land on capabilities that are up at the start of the step.
/// After the stochastic pass, direct jamming hits every connected robot
/// whose jamming-ratio condition holds.
pub fn sample_attacks<R: Rng + ?Sized>(
    step: usize,
    robots: &[Exposure],
    zones: &ZoneSet,
    dt: f64,
    delta1: f64,
    rng: &mut R,
) -> Vec<AttackEvent> {
    let mut events = Vec::new();
    for zone in zones.ordered() {
        let (id, mu, sigma, freq, kind) = match zone {
            ZoneRef::Sensing(z) => (z.id, z.mu, z.sigma, z.attack_freq, AttackKind::Sensing),
            ZoneRef::Comm(z) => (z.id, z.mu, z.sigma, z.attack_freq, AttackKind::Comm),
        };
        if !attack_attempt(step, dt, freq) {
            continue;
        }
        for (robot, exposure) in robots.iter().enumerate() {
            let draw: f64 = rng.random();
            let up = match kind {
                AttackKind::Sensing => exposure.status.sensing_ok,
                _ => exposure.status.comm_ok,
            };
            let p = (delta1 * attack_probability(&exposure.position, &mu, &sigma)).clamp(0.0, 1.0);
            if up && draw < p {
                events.push(AttackEvent {
                    step,
                    robot,
                    zone: id,
                    kind,
                    recovered_at: None,
                });
            }
        }
    }
    for zone in &zones.comm {
        for (robot, exposure) in robots.iter().enumerate() {
            let Some(c_star) = exposure.c_star else { continue };
            if !exposure.status.comm_ok {
                continue;
            }
            let already = events
                .iter()
                .any(|e| e.robot == robot && e.zone == zone.id && e.kind.hits_comm());
            if !already && direct_jam_condition(&exposure.position, zone, c_star) {
                events.push(AttackEvent {
                    step,
                    robot,
                    zone: zone.id,
                    kind: AttackKind::DirectJam,
                    recovered_at: None,
                });
            }
        }
    }
    events
}

/// Flip the capabilities hit by `events`.
pub fn apply_attacks(events: &[AttackEvent], statuses: &mut [RobotStatus]) {
    for e in events {
        if e.kind.hits_comm() {
            statuses[e.robot].comm_ok = false;
        } else {
            statuses[e.robot].sensing_ok = false;
        }
    }
}

/// What a mode does with zone knowledge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SharingPolicy {
    /// Attacked robots remember the zone.
    pub record: bool,
    /// Remembered zones are promoted to the group's shared sets.
    pub share: bool,
}

/// Known-zone sets: shared within the communication group, and private per
/// robot. Sets only grow.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Knowledge {
    pub shared_sensing: BTreeSet<ZoneId>,
    pub shared_comm: BTreeSet<ZoneId>,
    pub private_sensing: Vec<BTreeSet<ZoneId>>,
    pub private_comm: Vec<BTreeSet<ZoneId>>,
}

impl Knowledge {
    pub fn new(n_robots: usize) -> Self {
        Knowledge {
            private_sensing: vec![BTreeSet::new(); n_robots],
            private_comm: vec![BTreeSet::new(); n_robots],
            ..Default::default()
        }
    }

    /// The attacked robot learns the zone. A sensing zone found by a robot
    /// that still has its radio is broadcast immediately; comm zones wait
    /// for recovery.
    pub fn on_attack(&mut self, event: &AttackEvent, comm_ok: bool, policy: SharingPolicy) {
        if !policy.record {
            return;
        }
        match event.kind {
            AttackKind::Sensing => {
                self.private_sensing[event.robot].insert(event.zone);
                if comm_ok && policy.share {
                    self.shared_sensing.insert(event.zone);
                }
            }
            AttackKind::Comm | AttackKind::DirectJam => {
                self.private_comm[event.robot].insert(event.zone);
            }
        }
    }

    /// A robot that just regained its radio hands its private sets to the
    /// group.
    pub fn rejoin_broadcast(&mut self, robot: usize, policy: SharingPolicy) {
        if !policy.share {
            return;
        }
        self.shared_comm.extend(self.private_comm[robot].iter().copied());
        self.shared_sensing.extend(self.private_sensing[robot].iter().copied());
    }

    /// A connected robot receives everything the group knows.
    pub fn sync_member(&mut self, robot: usize, policy: SharingPolicy) {
        if !policy.share {
            return;
        }
        self.private_sensing[robot].extend(self.shared_sensing.iter().copied());
        self.private_comm[robot].extend(self.shared_comm.iter().copied());
    }

    /// Zones a robot must respect: its own plus, when connected, the
    /// group's.
    pub fn known_for(&self, robot: usize, connected: bool) -> (BTreeSet<ZoneId>, BTreeSet<ZoneId>) {
        let mut s = self.private_sensing[robot].clone();
        let mut c = self.private_comm[robot].clone();
        if connected {
            s.extend(self.shared_sensing.iter().copied());
            c.extend(self.shared_comm.iter().copied());
        }
        (s, c)
    }
}

/// Which lost capabilities come back this step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Recovery {
    pub sensing: bool,
    pub comm: bool,
}

/// Recovery test for one robot against its unrecovered attack events.
///
/// A capability recovers only when every zone holding it down is clear:
/// sensing zones via `sensing_margin` at the zone's `eps_recover`, comm
/// zones via `comm_margin` with `c* = 0` at `eps_recover` and no direct
/// jamming at `c_star` (the distance to the farthest group member).
pub fn check_recovery(position: &Vec2, active: &[&AttackEvent], zones: &ZoneSet, c_star: f64) -> Result<Recovery> {
    let mut sensing_events = 0;
    let mut comm_events = 0;
    let mut sensing_clear = true;
    let mut comm_clear = true;
    for event in active {
        match event.kind {
            AttackKind::Sensing => {
                sensing_events += 1;
                if let Some(z) = zones.sensing(event.zone) {
                    let conf = Confidence::new(z.eps_recover().min(0.5))?;
                    sensing_clear &= sensing_margin(position, z, &conf) >= 0.0;
                }
            }
            AttackKind::Comm | AttackKind::DirectJam => {
                comm_events += 1;
                if let Some(z) = zones.comm(event.zone) {
                    let conf = Confidence::new(z.eps_recover().min(0.5))?;
                    comm_clear &= comm_margin(position, z, 0.0, &conf) >= 0.0 && !direct_jam_condition(position, z, c_star);
                }
            }
        }
    }
    Ok(Recovery {
        sensing: sensing_events > 0 && sensing_clear,
        comm: comm_events > 0 && comm_clear,
    })
}

/// The communication group: every robot with a working radio.
pub fn comm_group(statuses: &[RobotStatus]) -> Vec<usize> {
    statuses
        .iter()
        .enumerate()
        .filter(|(_, s)| s.comm_ok)
        .map(|(i, _)| i)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Mat2;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const RESILIENT: SharingPolicy = SharingPolicy {
        record: true,
        share: true,
    };
    const INDIVIDUAL: SharingPolicy = SharingPolicy {
        record: true,
        share: false,
    };

    fn sensing(id: u32, mu: Vec2, s: f64) -> SensingZone {
        SensingZone {
            id: ZoneId(id),
            mu,
            sigma: Mat2::identity() * s,
            radius: 0.3,
            attack_freq: 1.0,
            eps_recover: 0.1,
        }
    }

    fn comm(id: u32, mu: Vec2, s: f64) -> CommZone {
        CommZone {
            id: ZoneId(id),
            mu,
            sigma: Mat2::identity() * s,
            delta2: 0.5,
            attack_freq: 1.0,
            eps_recover: 0.1,
        }
    }

    fn healthy_at(x: Vec2) -> Exposure {
        Exposure {
            position: x,
            status: RobotStatus::default(),
            c_star: Some(0.0),
        }
    }

    fn event(kind: AttackKind, zone: u32) -> AttackEvent {
        AttackEvent {
            step: 3,
            robot: 0,
            zone: ZoneId(zone),
            kind,
            recovered_at: None,
        }
    }

    #[test]
    fn schedule_one_hz_at_ten_hz_sampling() {
        let steps: Vec<usize> = (0..=35).filter(|&s| attack_attempt(s, 0.1, 1.0)).collect();
        assert_eq!(steps, vec![10, 20, 30]);
        let steps: Vec<usize> = (0..=3000).filter(|&s| attack_attempt(s, 0.1, 1.0)).collect();
        assert_eq!(steps, (1..=300).map(|k| 10 * k).collect::<Vec<_>>());
    }

    #[test]
    fn certain_attack_when_field_saturates() {
        let zones = ZoneSet::new(vec![sensing(0, Vec2::zeros(), 0.1)], vec![]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let events = sample_attacks(10, &[healthy_at(Vec2::zeros())], &zones, 0.1, 1.0, &mut rng);
        assert_eq!(events.len(), 1);
        assert_eq!(events[0].kind, AttackKind::Sensing);
        // Not an attempt step.
        assert!(sample_attacks(11, &[healthy_at(Vec2::zeros())], &zones, 0.1, 1.0, &mut rng).is_empty());
    }

    #[test]
    fn far_robots_are_never_attacked() {
        let zones = ZoneSet::new(vec![sensing(0, Vec2::zeros(), 0.3)], vec![comm(1, Vec2::zeros(), 0.3)]);
        let far = Exposure {
            c_star: Some(1.0),
            ..healthy_at(Vec2::new(30.0, 0.0))
        };
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for k in 1..=100_000 {
            assert!(sample_attacks(10 * k, &[far], &zones, 0.1, 1.0, &mut rng).is_empty());
        }
    }

    #[test]
    fn direct_jam_fires_every_step() {
        let zones = ZoneSet::new(vec![], vec![comm(4, Vec2::new(0.5, 0.0), 0.3)]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let robots = [
            Exposure {
                c_star: Some(2.0),
                ..healthy_at(Vec2::zeros())
            },
            Exposure {
                c_star: Some(2.0),
                ..healthy_at(Vec2::new(40.0, 0.0))
            },
        ];
        for step in [1, 2, 3] {
            let events = sample_attacks(step, &robots, &zones, 0.1, 1.0, &mut rng);
            assert_eq!(events.len(), 1);
            assert_eq!((events[0].robot, events[0].kind), (0, AttackKind::DirectJam));
        }
    }

    #[test]
    fn lost_capabilities_are_not_hit_again() {
        let zones = ZoneSet::new(vec![sensing(0, Vec2::zeros(), 0.1)], vec![]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let lost = Exposure {
            status: RobotStatus {
                sensing_ok: false,
                comm_ok: true,
            },
            ..healthy_at(Vec2::zeros())
        };
        assert!(sample_attacks(10, &[lost], &zones, 0.1, 1.0, &mut rng).is_empty());
    }

    #[test]
    fn sensing_attack_on_connected_robot_is_shared() {
        let mut k = Knowledge::new(2);
        k.on_attack(&event(AttackKind::Sensing, 2), true, RESILIENT);
        assert!(k.shared_sensing.contains(&ZoneId(2)));
        assert!(k.private_sensing[0].contains(&ZoneId(2)));
    }

    #[test]
    fn comm_attack_stays_private_until_rejoin() {
        let mut k = Knowledge::new(2);
        k.on_attack(&event(AttackKind::Comm, 5), false, RESILIENT);
        assert!(k.shared_comm.is_empty());
        assert!(k.private_comm[0].contains(&ZoneId(5)));
        k.rejoin_broadcast(0, RESILIENT);
        assert_eq!(k.shared_comm.len(), 1);
    }

    #[test]
    fn sensing_attack_while_disconnected_is_promoted_later() {
        let mut k = Knowledge::new(1);
        k.on_attack(&event(AttackKind::Sensing, 1), false, RESILIENT);
        assert!(k.shared_sensing.is_empty());
        k.rejoin_broadcast(0, RESILIENT);
        assert!(k.shared_sensing.contains(&ZoneId(1)));
    }

    #[test]
    fn rejoin_without_novelty_changes_nothing() {
        let mut k = Knowledge::new(1);
        k.on_attack(&event(AttackKind::Sensing, 1), true, RESILIENT);
        let before = k.clone();
        k.rejoin_broadcast(0, RESILIENT);
        assert_eq!(k, before);
    }

    #[test]
    fn rejoin_order_does_not_matter() {
        let mut a = Knowledge::new(2);
        a.private_comm[0].insert(ZoneId(1));
        a.private_comm[1].insert(ZoneId(2));
        a.private_comm[1].insert(ZoneId(1));
        let mut b = a.clone();
        a.rejoin_broadcast(0, RESILIENT);
        a.rejoin_broadcast(1, RESILIENT);
        b.rejoin_broadcast(1, RESILIENT);
        b.rejoin_broadcast(0, RESILIENT);
        assert_eq!(a.shared_comm, b.shared_comm);
    }

    #[test]
    fn individual_and_vanilla_policies() {
        let mut k = Knowledge::new(1);
        k.on_attack(&event(AttackKind::Sensing, 1), true, INDIVIDUAL);
        k.rejoin_broadcast(0, INDIVIDUAL);
        assert!(k.shared_sensing.is_empty());
        assert_eq!(k.private_sensing[0].len(), 1);
        let mut v = Knowledge::new(1);
        let vanilla = SharingPolicy {
            record: false,
            share: false,
        };
        v.on_attack(&event(AttackKind::Comm, 1), true, vanilla);
        assert_eq!(v, Knowledge::new(1));
    }

    #[test]
    fn recovery_far_away() {
        let zones = ZoneSet::new(vec![sensing(0, Vec2::zeros(), 0.3)], vec![comm(1, Vec2::zeros(), 0.3)]);
        let s = event(AttackKind::Sensing, 0);
        let c = event(AttackKind::Comm, 1);
        let r = check_recovery(&Vec2::new(100.0, 0.0), &[&s, &c], &zones, 1.0).unwrap();
        assert_eq!(r, Recovery { sensing: true, comm: true });
    }

    #[test]
    fn recovery_boundary_is_inclusive() {
        let z = sensing(0, Vec2::zeros(), 0.3);
        let conf = Confidence::new(z.eps_recover).unwrap();
        // Zero-margin distance along +x; nudge to the first representable
        // point with a non-negative margin.
        let mut d = z.radius + conf.quantile() * 0.3_f64.sqrt();
        while sensing_margin(&Vec2::new(d, 0.0), &z, &conf) < 0.0 {
            d = f64::from_bits(d.to_bits() + 1);
        }
        let x = Vec2::new(d, 0.0);
        assert!(sensing_margin(&x, &z, &conf).abs() < 1e-12);
        let zones = ZoneSet::new(vec![z], vec![]);
        let s = event(AttackKind::Sensing, 0);
        assert!(check_recovery(&x, &[&s], &zones, 0.0).unwrap().sensing);
        let inside = Vec2::new(d - 1e-6, 0.0);
        assert!(!check_recovery(&inside, &[&s], &zones, 0.0).unwrap().sensing);
    }

    #[test]
    fn recovery_needs_every_zone() {
        let zones = ZoneSet::new(
            vec![sensing(0, Vec2::zeros(), 0.3), sensing(1, Vec2::new(5.0, 0.0), 0.3)],
            vec![],
        );
        let a = event(AttackKind::Sensing, 0);
        let b = event(AttackKind::Sensing, 1);
        // Escaped zone 0 only.
        let r = check_recovery(&Vec2::new(5.0, 0.2), &[&a, &b], &zones, 0.0).unwrap();
        assert!(!r.sensing);
    }

    #[test]
    fn direct_jam_blocks_comm_recovery() {
        let zones = ZoneSet::new(vec![], vec![comm(0, Vec2::zeros(), 0.01)]);
        let c = event(AttackKind::DirectJam, 0);
        let x = Vec2::new(1.0, 0.0);
        assert!(check_recovery(&x, &[&c], &zones, 0.0).unwrap().comm);
        assert!(!check_recovery(&x, &[&c], &zones, 3.0).unwrap().comm);
    }

    #[test]
    fn groups() {
        let ok = RobotStatus::default();
        let lost = RobotStatus {
            sensing_ok: true,
            comm_ok: false,
        };
        assert_eq!(comm_group(&[ok, ok, ok]), vec![0, 1, 2]);
        assert!(comm_group(&[lost, lost]).is_empty());
        assert_eq!(comm_group(&[lost, ok, lost, ok]), vec![1, 3]);
        assert_eq!(lost.state(), StatusState::CommLost);
    }
}
