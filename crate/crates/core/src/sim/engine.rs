use std::collections::BTreeSet;

use log::debug;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::crypto::{random_key, Key128, NodeId};
use crate::geometry::DeploymentConfig;
use crate::protocol::{
    AdvertOutcome, BaseStation, Message, MessageTag, OpCounters, ProtocolParams, SensorNode, ThirdParty, TpAdvert,
    TpMode, TraceRecord,
};

use super::adversary::{Adversary, Capture, Transcript};
use super::attack::{AttackAction, AttackScript};
use super::energy::{
    energy_uj, expected_energy_uj, expected_sensor_counts, expected_tp_counts, EnergyModel, OpCounts, SizeTable,
};
use super::report::{Conservation, EnergyReport, MemoryReport, RoleStats, SimReport, REPORT_SCHEMA};
use super::topology::{EdgeMode, Topology};
use super::SimError;

/// When third parties broadcast their chain link.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdvertPolicy {
    /// In rounds where sensors come online.
    #[default]
    Discovery,
    /// Every round until the wipe.
    EveryRound,
}

/// What the adversary has overheard.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Eavesdrop {
    /// Traffic delivered from the first capture round onwards.
    #[default]
    FromFirstCapture,
    /// All traffic since deployment.
    Global,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub deployment: DeploymentConfig,
    pub edge_mode: EdgeMode,
    pub protocol: ProtocolParams,
    /// `T_k`: third parties wipe at the start of this round.
    pub wipe_round: u64,
    pub adverts: AdvertPolicy,
    /// Independent loss probability per addressed copy.
    pub loss_probability: f64,
    pub eavesdrop: Eavesdrop,
    /// The base station re-provisions wiped third parties in this round.
    pub redeploy_round: Option<u64>,
    pub energy: EnergyModel,
    pub sizes: SizeTable,
    pub record_trace: bool,
}

impl SimConfig {
    pub fn new(deployment: DeploymentConfig) -> Self {
        SimConfig {
            deployment,
            edge_mode: EdgeMode::Torus,
            protocol: ProtocolParams::default(),
            wipe_round: 7,
            adverts: AdvertPolicy::Discovery,
            loss_probability: 0.0,
            eavesdrop: Eavesdrop::FromFirstCapture,
            redeploy_round: None,
            energy: EnergyModel::default(),
            sizes: SizeTable::default(),
            record_trace: false,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        self.deployment.validate()?;
        self.energy.validate()?;
        if !(0.0..1.0).contains(&self.loss_probability) {
            return Err(SimError::Invalid(format!("loss probability must lie in [0, 1), got {}", self.loss_probability)));
        }
        if self.protocol.chain_length < 2 {
            return Err(SimError::Invalid("chain length must be at least 2".into()));
        }
        if self.wipe_round >= self.protocol.chain_length as u64 {
            return Err(SimError::Invalid("wipe round must precede chain exhaustion".into()));
        }
        Ok(())
    }
}

/// Output of a run: the report plus the optional delivery trace.
#[derive(Clone, Debug)]
pub struct SimRun {
    pub report: SimReport,
    pub trace: Vec<TraceRecord>,
    pub established_links: Vec<(NodeId, NodeId)>,
    /// Established links the adversary can read, lower id first.
    pub compromised_links: Vec<(NodeId, NodeId)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Dest {
    Sensor(u32),
    Tp(u32),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Life {
    Pending,
    Alive,
    Captured,
}

struct Envelope {
    sent: u64,
    from: NodeId,
    to: Dest,
    msg: Message,
    /// Advert distance from the transmitter.
    distance: f64,
    forged: bool,
}

struct Engine<'a> {
    topo: &'a Topology,
    cfg: &'a SimConfig,
    script: &'a AttackScript,
    bs: BaseStation,
    sensors: Vec<Option<SensorNode>>,
    sensor_life: Vec<Life>,
    tps: Vec<ThirdParty>,
    tp_life: Vec<Life>,
    inbox: Vec<Envelope>,
    outbox: Vec<Envelope>,
    rng: ChaCha8Rng,
    loss_rng: ChaCha8Rng,
    last_hello: Vec<Option<u64>>,
    newly_confirmed: Vec<Vec<NodeId>>,
    requested: Vec<BTreeSet<NodeId>>,
    record_transcripts: bool,
    adversary: Adversary,
    overheard: Vec<(u64, Key128)>,
    requesters: BTreeSet<(u32, NodeId)>,
    traffic: Conservation,
    trace: Vec<TraceRecord>,
    impersonation_attempts: u64,
    impersonation_acceptances: u64,
    failed_confirms: u64,
    forged_ids: u64,
    sensor_bits: u32,
    tp_bits: u32,
}

/// Runs discovery and key establishment on `topo`, applying `script`.
pub fn run_key_establishment(topo: &Topology, cfg: &SimConfig, script: &AttackScript) -> Result<SimRun, SimError> {
    cfg.validate()?;
    script.validate(topo)?;
    if topo.deploy_round.len() != topo.sensor_count() {
        return Err(SimError::Invalid("deploy_round must list every sensor".into()));
    }
    let mut engine = Engine::new(topo, cfg, script)?;
    engine.run()?;
    Ok(engine.finish())
}

impl<'a> Engine<'a> {
    fn new(topo: &'a Topology, cfg: &'a SimConfig, script: &'a AttackScript) -> Result<Self, SimError> {
        let seed = cfg.deployment.seed;
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x005e_ed0f_ba5e);
        let mut bs = BaseStation::new(NodeId(u64::MAX), cfg.protocol.clone(), &mut rng)?;
        let n = topo.sensor_count();
        let mut tps = Vec::with_capacity(topo.tp_count());
        let mut tp_bits = 0;
        for k in 0..topo.tp_count() {
            let tp = bs.provision_third_party(NodeId((n + k) as u64), cfg.wipe_round)?;
            tp_bits = tp_bits.max(tp.persistent_key_bits());
            tps.push(tp);
        }
        Ok(Engine {
            topo,
            cfg,
            script,
            bs,
            sensors: (0..n).map(|_| None).collect(),
            sensor_life: vec![Life::Pending; n],
            tp_life: vec![Life::Alive; tps.len()],
            tps,
            inbox: Vec::new(),
            outbox: Vec::new(),
            rng,
            loss_rng: ChaCha8Rng::seed_from_u64(seed ^ 0x10_55),
            last_hello: vec![None; n],
            newly_confirmed: vec![Vec::new(); n],
            requested: vec![BTreeSet::new(); n],
            record_transcripts: script.has_captures(),
            adversary: Adversary::default(),
            overheard: Vec::new(),
            requesters: BTreeSet::new(),
            traffic: Conservation::default(),
            trace: Vec::new(),
            impersonation_attempts: 0,
            impersonation_acceptances: 0,
            failed_confirms: 0,
            forged_ids: 0,
            sensor_bits: 0,
            tp_bits,
        })
    }

    fn n(&self) -> u64 {
        self.topo.sensor_count() as u64
    }

    fn horizon(&self) -> u64 {
        let deploy = self.topo.deploy_round.iter().copied().max().unwrap_or(0);
        let redeploy = self.cfg.redeploy_round.map_or(0, |r| r + 1 + self.cfg.wipe_round);
        self.cfg.wipe_round.max(self.script.last_round()).max(deploy).max(redeploy) + 1
    }

    fn run(&mut self) -> Result<(), SimError> {
        let horizon = self.horizon();
        let script = self.script;
        let mut events = script.events.iter().peekable();
        let mut round = 0;
        while round <= horizon || !self.outbox.is_empty() {
            self.inbox = std::mem::take(&mut self.outbox);
            let deploying: Vec<u32> =
                (0..self.topo.sensor_count() as u32).filter(|&i| self.topo.deploy_round[i as usize] == round).collect();
            if self.cfg.redeploy_round == Some(round) {
                self.redeploy(round)?;
            }
            if !deploying.is_empty() {
                self.bs.set_epoch(round);
                for &i in &deploying {
                    let node = self.bs.provision_sensor(NodeId(i as u64))?;
                    self.sensor_bits = self.sensor_bits.max(node.persistent_key_bits());
                    self.sensors[i as usize] = Some(node);
                    self.sensor_life[i as usize] = Life::Alive;
                }
            }
            let mut injections = Vec::new();
            while let Some(ev) = events.next_if(|e| e.round == round) {
                match &ev.action {
                    AttackAction::CaptureSensor { id } => self.capture_sensor(*id as u32, round),
                    AttackAction::CaptureTp { id } => self.capture_tp((*id - self.n()) as u32, round),
                    other => injections.push(other.clone()),
                }
            }
            for tp in &mut self.tps {
                tp.tick(round);
            }
            self.deliver(round)?;
            for &i in &deploying {
                self.send_hello(i, None, round);
            }
            let advertise = match self.cfg.adverts {
                AdvertPolicy::Discovery => !deploying.is_empty(),
                AdvertPolicy::EveryRound => true,
            };
            if advertise {
                self.advertise(round)?;
            }
            for action in injections {
                self.inject(action, round);
            }
            self.send_requests(round);
            round += 1;
        }
        Ok(())
    }

    fn redeploy(&mut self, round: u64) -> Result<(), SimError> {
        self.bs.set_epoch(round + 1);
        let deadline = round + 1 + self.cfg.wipe_round;
        for k in 0..self.tps.len() {
            if self.tp_life[k] == Life::Alive && self.tps[k].mode() == TpMode::Wiped {
                let msg = self.bs.provision_packet(self.tps[k].id, deadline)?;
                self.push(round, self.bs.id, Dest::Tp(k as u32), msg);
            }
        }
        Ok(())
    }

    fn push(&mut self, sent: u64, from: NodeId, to: Dest, msg: Message) {
        self.traffic.addressed += 1;
        self.outbox.push(Envelope { sent, from, to, msg, distance: 0.0, forged: false });
    }

    fn sensor_mut(&mut self, i: u32) -> &mut SensorNode {
        self.sensors[i as usize].as_mut().expect("live sensor is provisioned")
    }

    fn send_hello(&mut self, i: u32, only: Option<&[u32]>, round: u64) {
        let mut rng = std::mem::replace(&mut self.rng, ChaCha8Rng::seed_from_u64(0));
        let hello = self.sensor_mut(i).hello(&mut rng);
        self.rng = rng;
        self.last_hello[i as usize] = Some(round);
        let from = NodeId(i as u64);
        let targets: Vec<u32> = match only {
            Some(t) => t.to_vec(),
            None => self.topo.neighbors[i as usize].clone(),
        };
        for j in targets {
            self.push(round, from, Dest::Sensor(j), hello.clone());
        }
    }

    fn advertise(&mut self, round: u64) -> Result<(), SimError> {
        for k in 0..self.tps.len() {
            if self.tp_life[k] != Life::Alive {
                continue;
            }
            let Some(adv) = self.tps[k].advertise(round)? else { continue };
            self.overheard.push((round, adv.disclosed_link));
            let from = self.tps[k].id;
            for &(j, dist) in &self.topo.tp_audience[k] {
                self.traffic.addressed += 1;
                self.outbox.push(Envelope {
                    sent: round,
                    from,
                    to: Dest::Sensor(j),
                    msg: Message::TpAdvert(adv),
                    distance: dist,
                    forged: false,
                });
            }
        }
        Ok(())
    }

    fn inject(&mut self, action: AttackAction, round: u64) {
        let (near, link) = match action {
            AttackAction::InjectForgedAdvert { near } => (near, random_key(&mut self.rng)),
            AttackAction::ReplayAdvert { near, link } => {
                let known = self.overheard.iter().rev().find(|(r, _)| *r < round).map(|(_, l)| *l);
                let link = link.and_then(|h| Key128::from_hex(&h)).or(known).unwrap_or_else(|| random_key(&mut self.rng));
                (near, link)
            }
            _ => unreachable!("captures are applied directly"),
        };
        self.forged_ids += 1;
        let adv = TpAdvert { tp_id: NodeId(u64::MAX - self.forged_ids), disclosed_link: link };
        for (j, dist) in self.topo.sensors_near(near, self.topo.reach) {
            self.traffic.addressed += 1;
            self.outbox.push(Envelope {
                sent: round,
                from: adv.tp_id,
                to: Dest::Sensor(j),
                msg: Message::TpAdvert(adv),
                distance: dist,
                forged: true,
            });
        }
    }

    fn send_requests(&mut self, round: u64) {
        for i in 0..self.sensors.len() {
            if self.newly_confirmed[i].is_empty() || self.sensor_life[i] != Life::Alive {
                self.newly_confirmed[i].clear();
                continue;
            }
            let mut peers = std::mem::take(&mut self.newly_confirmed[i]);
            peers.sort_unstable();
            let node = self.sensors[i].as_mut().expect("alive");
            let Some(tp) = node.chosen_tp() else { continue };
            for p in peers {
                if !node.initiates_with(p) || !self.requested[i].insert(p) {
                    continue;
                }
                let msg = node.request_keys_via(tp.id, &[p]);
                let dest = tp.id.0.checked_sub(self.topo.sensor_count() as u64).map(|k| Dest::Tp(k as u32));
                self.traffic.addressed += 1;
                match dest {
                    Some(to) if (to_index(to) as usize) < self.tps.len() => self.outbox.push(Envelope {
                        sent: round,
                        from: node.id,
                        to,
                        msg,
                        distance: 0.0,
                        forged: false,
                    }),
                    _ => self.traffic.dropped += 1,
                }
            }
        }
    }

    fn deliver(&mut self, round: u64) -> Result<(), SimError> {
        let mut inbox = std::mem::take(&mut self.inbox);
        // Adverts are heard before handshakes so acks carry fresh reachability.
        inbox.sort_by_key(|e| !matches!(e.msg, Message::TpAdvert(_)));
        let mut late_hellos: Vec<Vec<u32>> = Vec::new();
        let mut late_senders: BTreeSet<u32> = BTreeSet::new();
        for env in inbox {
            let alive = match env.to {
                Dest::Sensor(j) => self.sensor_life[j as usize] == Life::Alive,
                Dest::Tp(k) => self.tp_life[k as usize] == Life::Alive,
            };
            let lost = self.cfg.loss_probability > 0.0 && self.loss_rng.gen::<f64>() < self.cfg.loss_probability;
            if !alive || lost {
                self.traffic.dropped += 1;
                self.note(round, &env, if lost { "lost" } else { "unreachable" });
                continue;
            }
            self.traffic.delivered += 1;
            let outcome = match env.to {
                Dest::Sensor(j) => self.at_sensor(j, &env, round, &mut late_hellos, &mut late_senders),
                Dest::Tp(k) => self.at_tp(k, &env, round),
            };
            self.note(round, &env, outcome);
        }
        for j in late_senders {
            let targets = std::mem::take(&mut late_hellos[j as usize]);
            self.send_hello(j, Some(&targets), round);
        }
        Ok(())
    }

    fn note(&mut self, round: u64, env: &Envelope, outcome: &str) {
        if !self.cfg.record_trace {
            return;
        }
        let receiver = match env.to {
            Dest::Sensor(j) => NodeId(j as u64),
            Dest::Tp(k) => NodeId(self.n() + k as u64),
        };
        self.trace.push(TraceRecord {
            round,
            kind: "delivery".into(),
            sender: Some(env.from),
            receiver: Some(receiver),
            tag: Some(env.msg.tag().name().to_string()),
            outcome: outcome.to_string(),
        });
    }

    fn at_sensor(
        &mut self,
        j: u32,
        env: &Envelope,
        round: u64,
        late_hellos: &mut Vec<Vec<u32>>,
        late_senders: &mut BTreeSet<u32>,
    ) -> &'static str {
        let me = NodeId(j as u64);
        match &env.msg {
            Message::TpAdvert(adv) => {
                let outcome = self.sensor_mut(j).on_tp_advert(adv, env.distance, env.sent);
                let accepted = matches!(outcome, AdvertOutcome::Accepted { .. });
                if env.forged {
                    self.impersonation_attempts += 1;
                    if accepted {
                        self.impersonation_acceptances += 1;
                    }
                }
                if accepted {
                    "accepted"
                } else {
                    "rejected"
                }
            }
            Message::Hello { sender, .. } => {
                let sender = *sender;
                let Ok(ack) = self.sensor_mut(j).on_hello(&env.msg) else { return "error" };
                self.push(round, me, Dest::Sensor(sender.0 as u32), ack);
                // A node that joined after our own hello needs one from us.
                let ours = self.last_hello[j as usize];
                if ours.is_some_and(|r| r < env.sent) && !self.sensor_mut(j).neighbors().contains(&sender) {
                    if late_hellos.is_empty() {
                        late_hellos.resize(self.sensors.len(), Vec::new());
                    }
                    late_hellos[j as usize].push(sender.0 as u32);
                    late_senders.insert(j);
                }
                "ok"
            }
            Message::HelloAck { sender, .. } => match self.sensor_mut(j).on_hello_ack(&env.msg) {
                Ok(true) => {
                    self.newly_confirmed[j as usize].push(*sender);
                    "confirmed"
                }
                Ok(false) => "stale",
                Err(_) => "error",
            },
            Message::KeyResponse { .. } => {
                let mut rng = std::mem::replace(&mut self.rng, ChaCha8Rng::seed_from_u64(0));
                let res = self.sensor_mut(j).on_key_response(&env.msg, &mut rng);
                self.rng = rng;
                match res {
                    Ok((peer, confirm)) => {
                        if self.record_transcripts {
                            self.adversary.transcripts.push(Transcript {
                                delivered: round + 1,
                                sender: me,
                                receiver: peer,
                                msg: confirm.clone(),
                            });
                        }
                        self.push(round, me, Dest::Sensor(peer.0 as u32), confirm);
                        "ok"
                    }
                    Err(e) => {
                        debug!("sensor {me}: {e}");
                        "rejected"
                    }
                }
            }
            Message::KeyConfirm { .. } => match self.sensor_mut(j).on_key_confirm(&env.msg) {
                Ok(_) => "established",
                Err(e) => {
                    debug!("sensor {me}: {e}");
                    self.failed_confirms += 1;
                    "rejected"
                }
            },
            _ => "unexpected",
        }
    }

    fn at_tp(&mut self, k: u32, env: &Envelope, round: u64) -> &'static str {
        let tp_id = self.tps[k as usize].id;
        match env.msg.tag() {
            MessageTag::KeyRequest => match self.tps[k as usize].serve_request(&env.msg) {
                Ok(responses) => {
                    self.requesters.insert((k, env.from));
                    for r in responses {
                        self.push(round, tp_id, Dest::Sensor(env.from.0 as u32), r);
                    }
                    "served"
                }
                Err(e) => {
                    debug!("tp {tp_id}: {e}");
                    "refused"
                }
            },
            MessageTag::Provision => match self.tps[k as usize].on_provision(&env.msg) {
                Ok(()) => "provisioned",
                Err(_) => "rejected",
            },
            _ => "unexpected",
        }
    }

    fn capture_sensor(&mut self, i: u32, round: u64) {
        let index = self.adversary.captures.len();
        let capture = match (&self.sensors[i as usize], self.sensor_life[i as usize]) {
            (Some(node), Life::Alive) => Capture::of_sensor(index, round, node),
            _ => Capture::empty(index, round, NodeId(i as u64)),
        };
        self.adversary.captures.push(capture);
        self.sensor_life[i as usize] = Life::Captured;
    }

    fn capture_tp(&mut self, k: u32, round: u64) {
        let index = self.adversary.captures.len();
        let tp = &self.tps[k as usize];
        let capture = if self.tp_life[k as usize] == Life::Alive {
            // A wipe due this round happens before the adversary gets there.
            let mut tp = tp.clone();
            tp.tick(round);
            Capture::of_third_party(index, round, &tp)
        } else {
            Capture::empty(index, round, tp.id)
        };
        self.adversary.captures.push(capture);
        self.tp_life[k as usize] = Life::Captured;
    }

    fn finish(self) -> SimRun {
        let cfg = self.cfg;
        let topo = self.topo;
        let d = cfg.deployment.expected_degree;

        let mut established = Vec::new();
        let mut pairs = 0u64;
        for (i, ns) in topo.neighbors.iter().enumerate() {
            for &j in ns.iter().filter(|&&j| j as usize > i) {
                pairs += 1;
                let (Some(a), Some(b)) = (&self.sensors[i], &self.sensors[j as usize]) else { continue };
                if let (Some(ka), Some(kb)) = (a.established().get(&NodeId(j as u64)), b.established().get(&NodeId(i as u64))) {
                    if ka == kb {
                        established.push((i as u32, j, *ka));
                    }
                }
            }
        }
        let eavesdrop_from = match cfg.eavesdrop {
            Eavesdrop::Global => 0,
            Eavesdrop::FromFirstCapture => self.adversary.captures.first().map_or(u64::MAX, |c| c.round),
        };
        let first = self.adversary.first_indices(&established, eavesdrop_from);
        let compromise = self.adversary.timeline(&established, &first);
        let compromised_links = established
            .iter()
            .zip(&first)
            .filter(|(_, f)| f.is_some())
            .map(|(l, _)| (NodeId(l.0 as u64), NodeId(l.1 as u64)))
            .collect();
        let established_links = established.iter().map(|l| (NodeId(l.0 as u64), NodeId(l.1 as u64))).collect();

        let live: Vec<&SensorNode> = self.sensors.iter().flatten().collect();
        let sensor_ops: Vec<&OpCounters> = live.iter().map(|s| &s.ops).collect();
        let tp_ops: Vec<&OpCounters> = self.tps.iter().map(|t| &t.ops).collect();
        let sensor_uj: Vec<f64> = sensor_ops.iter().map(|o| energy_uj(o, &cfg.sizes, &cfg.energy)).collect();
        let tp_uj: Vec<f64> = tp_ops.iter().map(|o| energy_uj(o, &cfg.sizes, &cfg.energy)).collect();
        let sensor = role_stats(&sensor_ops, &sensor_uj);
        let third_party = role_stats(&tp_ops, &tp_uj);
        let served = self.requesters.len() as u64;
        let mut tp_total = OpCounters::default();
        for o in &tp_ops {
            tp_total.merge(o);
        }
        let per_requester = if served > 0 { OpCounts::observed(&tp_total).scale(1.0 / served as f64) } else { OpCounts::default() };
        let expected_sensor = expected_sensor_counts(d);
        let expected_tp = expected_tp_counts(d);
        let link_bits: f64 = if live.is_empty() {
            0.0
        } else {
            live.iter().map(|s| s.established().len() as f64 * 128.0).sum::<f64>() / live.len() as f64
        };
        let report = SimReport {
            schema: REPORT_SCHEMA.to_string(),
            seed: cfg.deployment.seed,
            scenario: cfg.deployment.scenario,
            edge_mode: topo.edge_mode,
            sensors: topo.sensor_count() as u64,
            third_parties: topo.tp_count() as u64,
            expected_degree: d,
            radius: topo.radius,
            wipe_round: cfg.wipe_round,
            rounds: self.horizon(),
            mean_degree: topo.mean_degree(),
            neighbor_pairs: pairs,
            established_links: established.len() as u64,
            empirical_local_connectivity: if pairs == 0 { 0.0 } else { established.len() as f64 / pairs as f64 },
            sensor,
            third_party,
            third_party_per_requester: per_requester,
            requesters_served: served,
            expected_sensor_ops: expected_sensor,
            expected_third_party_ops: expected_tp,
            energy: EnergyReport {
                model: cfg.energy.clone(),
                sizes: cfg.sizes.clone(),
                expected_sensor_uj: expected_energy_uj(true, &expected_sensor, &cfg.sizes, &cfg.energy),
                expected_third_party_uj: expected_energy_uj(false, &expected_tp, &cfg.sizes, &cfg.energy),
                sensor_uj,
                third_party_uj: tp_uj,
            },
            memory: MemoryReport {
                sensor_bits: self.sensor_bits,
                third_party_bits: self.tp_bits,
                third_party_bits_final: self.tps.iter().map(|t| t.persistent_key_bits()).max().unwrap_or(0),
                link_state_bits_mean: link_bits,
            },
            compromise,
            impersonation_attempts: self.impersonation_attempts,
            impersonation_acceptances: self.impersonation_acceptances,
            messages: self.traffic,
            dropped_requests: self.tps.iter().map(|t| t.dropped_requests()).sum(),
            failed_confirms: self.failed_confirms,
        };
        SimRun { report, trace: self.trace, established_links, compromised_links }
    }
}

fn to_index(d: Dest) -> u32 {
    match d {
        Dest::Sensor(i) | Dest::Tp(i) => i,
    }
}

fn role_stats(ops: &[&OpCounters], energy: &[f64]) -> RoleStats {
    let nodes = ops.len() as u64;
    if nodes == 0 {
        return RoleStats::default();
    }
    let mut total = OpCounters::default();
    for o in ops {
        total.merge(o);
    }
    let per = 1.0 / nodes as f64;
    let discovery = |op| -> f64 {
        total.iter().filter(|(o, item, _)| *o == op && item.is_discovery()).map(|(_, _, n)| n as f64).sum::<f64>() * per
    };
    let counts = OpCounts::observed(&total).scale(per);
    RoleStats {
        nodes,
        sent: counts.transmit,
        received: counts.receive,
        discovery_sent: discovery(crate::protocol::Op::Transmit),
        discovery_received: discovery(crate::protocol::Op::Receive),
        ops: counts,
        energy_uj_mean: energy.iter().sum::<f64>() * per,
    }
}
