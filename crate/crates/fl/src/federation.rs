//! The synchronous federation round loop.
//!
//! Per round: the controller broadcasts the encrypted community model, every
//! learner decrypts it, trains locally, encrypts, and uploads; the controller
//! aggregates the encrypted uploads by dataset-size weight without ever
//! decrypting anything. A trusted key authority (driver fixture) generates
//! the key pair, hands the public key out freely, and hands the secret key
//! to learners only — [`Controller`] has no field that could hold a secret
//! key, and every decryption anywhere goes through an [`AuditedSecret`]
//! whose per-party counts end up in the run's [`AuditLog`].
//!
//! In plaintext mode the identical loop runs with unencrypted model blobs,
//! which is what makes paired no-degradation comparisons meaningful.

use std::collections::HashMap;
use std::net::{TcpListener, TcpStream};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Instant;

use fedhe_core::ckks::{keygen, CkksParams, CkksParamsSpec, PublicKey, SecretKey};
use fedhe_core::pack::{decrypt_model, encrypt_model, NamedArray, PackedModel};
use fedhe_wire::codec::ModelBlob;
use fedhe_wire::transport::ChannelTrace;
use fedhe_wire::{duplex_pipe, Channel, FramedChannel, Message};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::aggregate::{aggregate_encrypted, aggregate_plain, AggregationWeights};
use crate::data::{partition, Environment, LabeledDataset};
use crate::mlp::{MlpModel, MlpSpec};
use crate::train::{local_sgd, TrainerSpec};
use crate::{FlError, Result};

/// Synthetic dataset sizing.
#[derive(Debug, Clone, PartialEq)]
pub struct DataSpec {
    pub train_examples: usize,
    pub eval_examples: usize,
    pub input_dim: usize,
    pub noise_sigma: f64,
}

impl DataSpec {
    /// Cohort-scale defaults: 8356 training and 2090 evaluation examples.
    pub fn cohort_default() -> Self {
        Self {
            train_examples: 8356,
            eval_examples: 2090,
            input_dim: 32,
            noise_sigma: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TransportMode {
    InProcess,
    Tcp { listen: String },
}

/// Whether model payloads travel encrypted or in the clear.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Plaintext,
    Encrypted,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Plaintext => "plaintext",
            Mode::Encrypted => "encrypted",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FederationConfig {
    pub learners: usize,
    pub rounds: usize,
    pub trainer: TrainerSpec,
    pub model: MlpSpec,
    pub environment: Environment,
    pub data: DataSpec,
    pub ckks: CkksParamsSpec,
    pub seed: u64,
    pub transport: TransportMode,
    /// Record raw byte traces on the controller side of every channel.
    pub trace_bytes: bool,
}

impl FederationConfig {
    /// Paper-style defaults at desk scale: 8 learners, E=4, lr=5e-5, batch 1,
    /// 8192 slots, 52-bit scale, depth 2, in-process transport.
    pub fn desk_default(environment: Environment) -> Self {
        Self {
            learners: 8,
            rounds: 25,
            trainer: TrainerSpec::paper_default(),
            model: MlpSpec::desk_default(),
            environment,
            data: DataSpec::cohort_default(),
            ckks: CkksParamsSpec::default(),
            seed: 42,
            transport: TransportMode::InProcess,
            trace_bytes: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.learners == 0 {
            return Err(FlError::InvalidConfig("need at least one learner".into()));
        }
        if self.trainer.epochs == 0 {
            return Err(FlError::InvalidConfig(
                "local epochs must be >= 1 in a federation".into(),
            ));
        }
        if self.data.train_examples < self.learners {
            return Err(FlError::InvalidConfig(format!(
                "{} training examples cannot cover {} learners",
                self.data.train_examples, self.learners
            )));
        }
        if self.data.eval_examples == 0 {
            return Err(FlError::InvalidConfig("empty evaluation set".into()));
        }
        if self.model.input_dim() != self.data.input_dim {
            return Err(FlError::InvalidConfig(format!(
                "model input dim {} != data input dim {}",
                self.model.input_dim(),
                self.data.input_dim
            )));
        }
        Ok(())
    }
}

/// One completed round, driver view.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundMetrics {
    pub round: u32,
    /// Community-model held-out loss (mean of (pred-y)^2 / 2).
    pub loss: f64,
    /// Community-model held-out mean absolute error.
    pub mae: f64,
    /// Slowest learner's local training time.
    pub t_train_ms: f64,
    /// Slowest learner's model encryption time (0 in plaintext mode).
    pub t_encrypt_ms: f64,
    /// Controller aggregation time.
    pub t_aggregate_ms: f64,
    /// Slowest learner's community-model decryption time (0 in plaintext).
    pub t_decrypt_ms: f64,
    /// Approximate controller-side wall time on the wire: broadcast plus
    /// collection minus the slowest learner's compute.
    pub t_transfer_ms: f64,
    /// Controller-side bytes moved this round, both directions.
    pub bytes_transferred: u64,
}

/// Per-party decryption counts for one run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AuditLog {
    counts: Vec<(String, u64)>,
}

impl AuditLog {
    pub fn decrypts_by(&self, party: &str) -> u64 {
        self.counts
            .iter()
            .filter(|(p, _)| p == party)
            .map(|(_, n)| n)
            .sum()
    }

    pub fn total_decrypts(&self) -> u64 {
        self.counts.iter().map(|(_, n)| n).sum()
    }

    pub fn parties(&self) -> impl Iterator<Item = &str> {
        self.counts.iter().map(|(p, _)| p.as_str())
    }
}

#[derive(Default)]
struct AuditRegistry {
    counts: Mutex<HashMap<String, u64>>,
}

impl AuditRegistry {
    fn record(&self, party: &str, ciphertexts: u64) {
        *self
            .counts
            .lock()
            .unwrap()
            .entry(party.to_string())
            .or_insert(0) += ciphertexts;
    }

    fn snapshot(&self) -> AuditLog {
        let mut counts: Vec<(String, u64)> = self
            .counts
            .lock()
            .unwrap()
            .iter()
            .map(|(k, v)| (k.clone(), *v))
            .collect();
        counts.sort();
        AuditLog { counts }
    }
}

/// A secret key bound to a party label; every model decryption through it
/// is tallied in the run's audit log (one count per ciphertext).
#[derive(Clone)]
pub struct AuditedSecret {
    sk: Arc<SecretKey>,
    party: String,
    registry: Arc<AuditRegistry>,
}

impl AuditedSecret {
    pub fn party(&self) -> &str {
        &self.party
    }

    pub fn decrypt_model(
        &self,
        packed: &PackedModel,
        params: &CkksParams,
    ) -> Result<Vec<NamedArray>> {
        self.registry
            .record(&self.party, packed.ciphertexts.len() as u64);
        Ok(decrypt_model(packed, params, &self.sk)?)
    }
}

impl std::fmt::Debug for AuditedSecret {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "AuditedSecret({})", self.party)
    }
}

/// Trusted key fixture: generates the pair, distributes the public key to
/// anyone and audited secret handles to learner-side parties only.
pub struct KeyAuthority {
    public: PublicKey,
    secret: Arc<SecretKey>,
    registry: Arc<AuditRegistry>,
}

impl KeyAuthority {
    pub fn new(params: &CkksParams, seed: u64) -> Self {
        let pair = keygen(params, &mut ChaCha20Rng::seed_from_u64(seed));
        Self {
            public: pair.public,
            secret: Arc::new(pair.secret),
            registry: Arc::new(AuditRegistry::default()),
        }
    }

    pub fn public_key(&self) -> &PublicKey {
        &self.public
    }

    pub fn secret_for(&self, party: impl Into<String>) -> AuditedSecret {
        AuditedSecret {
            sk: Arc::clone(&self.secret),
            party: party.into(),
            registry: Arc::clone(&self.registry),
        }
    }

    pub fn audit(&self) -> AuditLog {
        self.registry.snapshot()
    }
}

/// Learner-side timings for one round, milliseconds.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LearnerTimings {
    pub decrypt_ms: f64,
    pub train_ms: f64,
    pub encrypt_ms: f64,
}

type SharedTimings = Arc<Mutex<HashMap<(u32, u32), LearnerTimings>>>;

/// Everything a learner needs to serve rounds.
pub struct LearnerState {
    pub id: u32,
    dataset: Arc<LabeledDataset>,
    indices: Vec<usize>,
    trainer: TrainerSpec,
    model_spec: MlpSpec,
    params: CkksParams,
    public_key: PublicKey,
    secret: Option<AuditedSecret>,
    run_seed: u64,
    current_model: Option<MlpModel>,
}

impl LearnerState {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        id: u32,
        dataset: Arc<LabeledDataset>,
        indices: Vec<usize>,
        trainer: TrainerSpec,
        model_spec: MlpSpec,
        params: CkksParams,
        public_key: PublicKey,
        secret: Option<AuditedSecret>,
        run_seed: u64,
    ) -> Self {
        Self {
            id,
            dataset,
            indices,
            trainer,
            model_spec,
            params,
            public_key,
            secret,
            run_seed,
            current_model: None,
        }
    }

    pub fn contribution(&self) -> u64 {
        self.indices.len() as u64
    }

    pub fn current_model(&self) -> Option<&MlpModel> {
        self.current_model.as_ref()
    }
}

fn elapsed_ms(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() * 1e3
}

/// Deterministic seed derivation: a splitmix64 chain over the base seed and
/// tag words, so every RNG stream in a run is pinned by the config seed.
pub fn derive_seed(base: u64, tags: &[u64]) -> u64 {
    let mut h = base;
    for &t in tags {
        h ^= t.wrapping_add(0x9e37_79b9_7f4a_7c15);
        h = (h ^ (h >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        h = (h ^ (h >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        h ^= h >> 31;
    }
    h
}

/// Named RNG streams of a run, all derived from the config seed. Paired
/// plaintext/encrypted runs share the data and training streams, so their
/// trajectories differ only by encryption effects.
pub mod seeds {
    use super::derive_seed;

    /// One stream for the whole cohort: train and eval share the target
    /// function and are split from a single generation.
    pub fn dataset(run: u64) -> u64 {
        derive_seed(run, &[1])
    }
    pub fn partition(run: u64) -> u64 {
        derive_seed(run, &[3])
    }
    pub fn keys(run: u64) -> u64 {
        derive_seed(run, &[4])
    }
    pub fn initial_model(run: u64) -> u64 {
        derive_seed(run, &[5])
    }
    pub fn initial_encrypt(run: u64) -> u64 {
        derive_seed(run, &[6])
    }
    pub fn local_train(run: u64, learner: u32, round: u32) -> u64 {
        derive_seed(run, &[7, learner as u64, round as u64])
    }
    pub fn local_encrypt(run: u64, learner: u32, round: u32) -> u64 {
        derive_seed(run, &[8, learner as u64, round as u64])
    }
}

/// One learner round: decrypt the community model, train on the local
/// shard, return the encrypted (or plain) update. Training and encryption
/// randomness is derived from (run seed, learner id, round), so paired
/// plaintext/encrypted runs shuffle identically.
pub fn learner_opt(
    state: &mut LearnerState,
    round: u32,
    community: &ModelBlob,
) -> Result<(ModelBlob, LearnerTimings)> {
    let mut timings = LearnerTimings::default();

    let t0 = Instant::now();
    let arrays = match community {
        ModelBlob::Plain(arrays) => arrays.clone(),
        ModelBlob::Encrypted(packed) => {
            let secret = state.secret.as_ref().ok_or_else(|| {
                FlError::InvalidConfig("encrypted blob but no secret key".into())
            })?;
            secret.decrypt_model(packed, &state.params)?
        }
    };
    let model = MlpModel::from_arrays(&state.model_spec, &arrays)?;
    timings.decrypt_ms = match community {
        ModelBlob::Encrypted(_) => elapsed_ms(t0),
        ModelBlob::Plain(_) => 0.0,
    };

    let t1 = Instant::now();
    let mut train_rng =
        ChaCha20Rng::seed_from_u64(seeds::local_train(state.run_seed, state.id, round));
    let trained = local_sgd(
        &model,
        &state.dataset,
        &state.indices,
        &state.trainer,
        &mut train_rng,
    )?;
    timings.train_ms = elapsed_ms(t1);

    let t2 = Instant::now();
    let blob = match community {
        ModelBlob::Plain(_) => ModelBlob::Plain(trained.to_arrays()),
        ModelBlob::Encrypted(_) => {
            let mut enc_rng =
                ChaCha20Rng::seed_from_u64(seeds::local_encrypt(state.run_seed, state.id, round));
            let packed = encrypt_model(
                &trained.to_arrays(),
                &state.params,
                &state.public_key,
                &mut enc_rng,
            )?;
            ModelBlob::Encrypted(packed)
        }
    };
    timings.encrypt_ms = match community {
        ModelBlob::Encrypted(_) => elapsed_ms(t2),
        ModelBlob::Plain(_) => 0.0,
    };

    state.current_model = Some(trained);
    Ok((blob, timings))
}

/// Serves rounds over a channel until shutdown: register, then loop on
/// community-model messages.
pub fn learner_loop(
    mut channel: Box<dyn Channel>,
    mut state: LearnerState,
    timings: SharedTimings,
) -> Result<()> {
    channel.send(&Message::Register {
        learner_id: state.id,
        contribution: state.contribution(),
    })?;
    loop {
        match channel.recv()? {
            Message::CommunityModel { round, model } => {
                let blob = ModelBlob::from_bytes(&model, &state.params)?;
                let (out, t) = learner_opt(&mut state, round, &blob)?;
                timings.lock().unwrap().insert((round, state.id), t);
                channel.send(&Message::LocalModel {
                    round,
                    learner_id: state.id,
                    model: out.to_bytes(),
                })?;
            }
            Message::Shutdown => return Ok(()),
            other => {
                return Err(FlError::InvalidConfig(format!(
                    "learner {} got unexpected message {other:?}",
                    state.id
                )))
            }
        }
    }
}

/// Controller state: round counter, registered weights, and the current
/// community model as opaque blob bytes. Holds scheme parameters (public)
/// and nothing key-shaped — decryption is structurally impossible here.
pub struct Controller {
    params: CkksParams,
    mode: Mode,
    channels: Vec<Box<dyn Channel>>,
    weights: Option<AggregationWeights>,
    community: Vec<u8>,
    round: u32,
}

/// Controller-side result of one round.
#[derive(Debug, Clone)]
pub struct RoundOutcome {
    pub aggregate_ms: f64,
    pub transfer_ms: f64,
    pub bytes: u64,
    pub max_learner_busy_ms: f64,
}

impl Controller {
    pub fn new(
        params: CkksParams,
        mode: Mode,
        channels: Vec<Box<dyn Channel>>,
        initial_community: &ModelBlob,
    ) -> Self {
        Self {
            params,
            mode,
            channels,
            weights: None,
            community: initial_community.to_bytes(),
            round: 0,
        }
    }

    pub fn round(&self) -> u32 {
        self.round
    }

    pub fn community_blob(&self) -> Result<ModelBlob> {
        Ok(ModelBlob::from_bytes(&self.community, &self.params)?)
    }

    pub fn weights(&self) -> Option<&AggregationWeights> {
        self.weights.as_ref()
    }

    /// Collects one registration per channel, reorders channels by learner
    /// id, and fixes the aggregation weights from the declared sizes.
    pub fn register_all(&mut self) -> Result<()> {
        let n = self.channels.len();
        let mut registered: Vec<Option<(Box<dyn Channel>, u64)>> = (0..n).map(|_| None).collect();
        for mut channel in self.channels.drain(..) {
            match channel.recv() {
                Ok(Message::Register {
                    learner_id,
                    contribution,
                }) => {
                    let slot = learner_id as usize;
                    if slot >= n || registered[slot].is_some() {
                        return Err(FlError::RoundAborted {
                            round: 0,
                            reason: format!("invalid or duplicate learner id {learner_id}"),
                        });
                    }
                    registered[slot] = Some((channel, contribution));
                }
                Ok(other) => {
                    return Err(FlError::RoundAborted {
                        round: 0,
                        reason: format!("expected registration, got {other:?}"),
                    })
                }
                Err(e) => {
                    return Err(FlError::RoundAborted {
                        round: 0,
                        reason: format!("registration failed: {e}"),
                    })
                }
            }
        }
        let mut sizes = Vec::with_capacity(n);
        self.channels = registered
            .into_iter()
            .map(|slot| {
                let (channel, contribution) = slot.expect("all slots filled");
                sizes.push(contribution);
                channel
            })
            .collect();
        self.weights = Some(AggregationWeights::from_sizes(&sizes)?);
        Ok(())
    }

    /// One synchronous round: broadcast, collect exactly one local model per
    /// learner for this round, aggregate. Any learner failure aborts the
    /// round with no partial aggregation.
    pub fn run_round(&mut self, max_learner_busy_ms: impl FnOnce() -> f64) -> Result<RoundOutcome> {
        let round = self.round;
        let bytes_before = self.traffic();

        let t_send = Instant::now();
        for channel in self.channels.iter_mut() {
            channel
                .send(&Message::CommunityModel {
                    round,
                    model: self.community.clone(),
                })
                .map_err(|e| FlError::RoundAborted {
                    round,
                    reason: format!("broadcast failed: {e}"),
                })?;
        }
        let broadcast_ms = elapsed_ms(t_send);

        let t_collect = Instant::now();
        let mut uploads: Vec<Option<Vec<u8>>> = vec![None; self.channels.len()];
        for (expected_id, channel) in self.channels.iter_mut().enumerate() {
            match channel.recv() {
                Ok(Message::LocalModel {
                    round: r,
                    learner_id,
                    model,
                }) => {
                    if r != round || learner_id as usize != expected_id {
                        return Err(FlError::RoundAborted {
                            round,
                            reason: format!(
                                "expected round {round} model from learner {expected_id}, \
                                 got round {r} from learner {learner_id}"
                            ),
                        });
                    }
                    uploads[expected_id] = Some(model);
                }
                Ok(other) => {
                    return Err(FlError::RoundAborted {
                        round,
                        reason: format!("unexpected message {other:?}"),
                    })
                }
                Err(e) => {
                    return Err(FlError::RoundAborted {
                        round,
                        reason: format!("learner {expected_id} failed: {e}"),
                    })
                }
            }
        }
        let collect_ms = elapsed_ms(t_collect);

        let t_agg = Instant::now();
        let weights = self
            .weights
            .as_ref()
            .ok_or_else(|| FlError::InvalidConfig("round before registration".into()))?;
        let blobs: Vec<ModelBlob> = uploads
            .into_iter()
            .map(|bytes| ModelBlob::from_bytes(&bytes.expect("all collected"), &self.params))
            .collect::<std::result::Result<_, _>>()?;
        self.community = match self.mode {
            Mode::Plaintext => {
                let models: Vec<Vec<NamedArray>> = blobs
                    .into_iter()
                    .map(|b| match b {
                        ModelBlob::Plain(m) => Ok(m),
                        ModelBlob::Encrypted(_) => Err(FlError::ModelMismatch(
                            "encrypted upload in a plaintext federation".into(),
                        )),
                    })
                    .collect::<Result<_>>()?;
                ModelBlob::Plain(aggregate_plain(&models, weights)?).to_bytes()
            }
            Mode::Encrypted => {
                let models: Vec<PackedModel> = blobs
                    .into_iter()
                    .map(|b| match b {
                        ModelBlob::Encrypted(m) => Ok(m),
                        ModelBlob::Plain(_) => Err(FlError::ModelMismatch(
                            "plaintext upload in an encrypted federation".into(),
                        )),
                    })
                    .collect::<Result<_>>()?;
                ModelBlob::Encrypted(aggregate_encrypted(&models, weights, &self.params)?)
                    .to_bytes()
            }
        };
        let aggregate_ms = elapsed_ms(t_agg);

        self.round += 1;
        let busy = max_learner_busy_ms();
        Ok(RoundOutcome {
            aggregate_ms,
            transfer_ms: (broadcast_ms + collect_ms - busy).max(0.0),
            bytes: self.traffic() - bytes_before,
            max_learner_busy_ms: busy,
        })
    }

    /// Orderly end of session; returns controller-side traces when enabled.
    pub fn shutdown(mut self) -> Result<Vec<Option<ChannelTrace>>> {
        for channel in self.channels.iter_mut() {
            channel.send(&Message::Shutdown)?;
        }
        Ok(self.channels.iter().map(|c| c.trace()).collect())
    }

    fn traffic(&self) -> u64 {
        self.channels
            .iter()
            .map(|c| c.bytes_sent() + c.bytes_received())
            .sum()
    }
}

/// Mean squared-error loss (halved, matching the trainer) and mean absolute
/// error of a model over a dataset.
pub fn evaluate_community(model: &MlpModel, eval: &LabeledDataset) -> Result<(f64, f64)> {
    if eval.is_empty() {
        return Err(FlError::EmptyDataset);
    }
    let mut loss = 0.0f64;
    let mut mae = 0.0f64;
    for row in 0..eval.len() {
        let err = model.predict(eval.features_of(row)) - eval.targets[row];
        loss += 0.5 * err * err;
        mae += err.abs();
    }
    let n = eval.len() as f64;
    Ok((loss / n, mae / n))
}

/// Result of a full federation run.
#[derive(Debug)]
pub struct FederationOutcome {
    pub metrics: Vec<RoundMetrics>,
    pub final_model: MlpModel,
    pub audit: AuditLog,
    /// Controller-side per-learner traces, when `trace_bytes` was set.
    pub traces: Vec<Option<ChannelTrace>>,
}

/// Runs a full federation in the given mode. Deterministic for a fixed
/// config: datasets, partitions, keys, initial model, and every per-round
/// RNG stream derive from the config seed.
pub fn run_federation(config: &FederationConfig, mode: Mode) -> Result<FederationOutcome> {
    config.validate()?;
    let params = CkksParams::new(&config.ckks)?;

    let (train, eval) = LabeledDataset::generate_split(
        config.data.train_examples,
        config.data.eval_examples,
        config.data.input_dim,
        config.data.noise_sigma,
        seeds::dataset(config.seed),
    );
    let train = Arc::new(train);
    let plan = partition(
        &train,
        config.learners,
        config.environment.scheme(),
        seeds::partition(config.seed),
    )?;

    let authority = KeyAuthority::new(&params, seeds::keys(config.seed));

    let initial_model = MlpModel::init(
        &config.model,
        &mut ChaCha20Rng::seed_from_u64(seeds::initial_model(config.seed)),
    )?;
    // The initial weights are public, but the controller still only ever
    // sees them encrypted: the authority packs them before handoff.
    let initial_blob = match mode {
        Mode::Plaintext => ModelBlob::Plain(initial_model.to_arrays()),
        Mode::Encrypted => ModelBlob::Encrypted(encrypt_model(
            &initial_model.to_arrays(),
            &params,
            authority.public_key(),
            &mut ChaCha20Rng::seed_from_u64(seeds::initial_encrypt(config.seed)),
        )?),
    };

    // Build learner states.
    let mut states = Vec::with_capacity(config.learners);
    for (id, indices) in plan.indices.iter().enumerate() {
        states.push(LearnerState {
            id: id as u32,
            dataset: Arc::clone(&train),
            indices: indices.clone(),
            trainer: config.trainer.clone(),
            model_spec: config.model.clone(),
            params: params.clone(),
            public_key: authority.public_key().clone(),
            secret: match mode {
                Mode::Encrypted => Some(authority.secret_for(format!("learner-{id}"))),
                Mode::Plaintext => None,
            },
            run_seed: config.seed,
            current_model: None,
        });
    }

    // Wire the transports and launch learner threads.
    let timings: SharedTimings = Arc::new(Mutex::new(HashMap::new()));
    let mut controller_channels: Vec<Box<dyn Channel>> = Vec::with_capacity(config.learners);
    let mut handles = Vec::with_capacity(config.learners);
    match &config.transport {
        TransportMode::InProcess => {
            for state in states {
                let (controller_end, learner_end) = duplex_pipe();
                let mut ch = FramedChannel::new(controller_end);
                if config.trace_bytes {
                    ch = ch.with_tracing();
                }
                controller_channels.push(Box::new(ch));
                let timings = Arc::clone(&timings);
                handles.push(thread::spawn(move || {
                    learner_loop(Box::new(FramedChannel::new(learner_end)), state, timings)
                }));
            }
        }
        TransportMode::Tcp { listen } => {
            let listener = TcpListener::bind(listen.as_str()).map_err(|e| {
                FlError::InvalidConfig(format!("cannot listen on {listen}: {e}"))
            })?;
            let addr = listener.local_addr().expect("bound listener has an address");
            for state in states {
                let timings = Arc::clone(&timings);
                handles.push(thread::spawn(move || {
                    let stream = TcpStream::connect(addr)
                        .map_err(|e| FlError::Wire(fedhe_wire::WireError::Io(e)))?;
                    learner_loop(Box::new(FramedChannel::tcp(stream)), state, timings)
                }));
            }
            for _ in 0..config.learners {
                let (stream, _) = listener
                    .accept()
                    .map_err(|e| FlError::Wire(fedhe_wire::WireError::Io(e)))?;
                let mut ch = FramedChannel::tcp(stream);
                if config.trace_bytes {
                    ch = ch.with_tracing();
                }
                controller_channels.push(Box::new(ch));
            }
        }
    }

    let evaluator = match mode {
        Mode::Encrypted => Some(authority.secret_for("evaluator")),
        Mode::Plaintext => None,
    };
    let blob_to_model = |blob: &ModelBlob| -> Result<MlpModel> {
        let arrays = match blob {
            ModelBlob::Plain(arrays) => arrays.clone(),
            ModelBlob::Encrypted(packed) => evaluator
                .as_ref()
                .expect("encrypted mode has an evaluator")
                .decrypt_model(packed, &params)?,
        };
        MlpModel::from_arrays(&config.model, &arrays)
    };

    let run = || -> Result<(Vec<RoundMetrics>, Controller)> {
        let mut controller =
            Controller::new(params.clone(), mode, controller_channels, &initial_blob);
        controller.register_all()?;
        if let Some(weights) = controller.weights() {
            if weights.sizes() != plan.sizes().as_slice() {
                return Err(FlError::InvalidConfig(
                    "registered contributions disagree with the partition plan".into(),
                ));
            }
        }

        let mut metrics = Vec::with_capacity(config.rounds);
        for t in 0..config.rounds as u32 {
            let timings_for_round = {
                let timings = Arc::clone(&timings);
                move || -> f64 {
                    let map = timings.lock().unwrap();
                    (0..config.learners as u32)
                        .filter_map(|id| map.get(&(t, id)))
                        .map(|lt| lt.decrypt_ms + lt.train_ms + lt.encrypt_ms)
                        .fold(0.0, f64::max)
                }
            };
            let outcome = controller.run_round(timings_for_round)?;

            let t_dec = Instant::now();
            let community = blob_to_model(&controller.community_blob()?)?;
            let _eval_decrypt_ms = elapsed_ms(t_dec);
            let (loss, mae) = evaluate_community(&community, &eval)?;

            let per_learner = {
                let map = timings.lock().unwrap();
                (0..config.learners as u32)
                    .filter_map(|id| map.get(&(t, id)).copied())
                    .collect::<Vec<_>>()
            };
            let fold_max = |f: fn(&LearnerTimings) -> f64| {
                per_learner.iter().map(f).fold(0.0, f64::max)
            };
            metrics.push(RoundMetrics {
                round: t,
                loss,
                mae,
                t_train_ms: fold_max(|lt| lt.train_ms),
                t_encrypt_ms: fold_max(|lt| lt.encrypt_ms),
                t_aggregate_ms: outcome.aggregate_ms,
                t_decrypt_ms: fold_max(|lt| lt.decrypt_ms),
                t_transfer_ms: outcome.transfer_ms,
                bytes_transferred: outcome.bytes,
            });
        }
        Ok((metrics, controller))
    };

    let result = run();
    let (metrics, traces, final_model) = match result {
        Ok((metrics, controller)) => {
            let final_model = blob_to_model(&controller.community_blob()?)?;
            let traces = controller.shutdown()?;
            (metrics, traces, final_model)
        }
        Err(e) => {
            // Learner threads see closed channels and exit; surface the
            // controller's diagnostic.
            for handle in handles {
                let _ = handle.join();
            }
            return Err(e);
        }
    };

    for handle in handles {
        match handle.join() {
            Ok(Ok(())) => {}
            Ok(Err(e)) => return Err(e),
            Err(_) => {
                return Err(FlError::InvalidConfig("learner thread panicked".into()));
            }
        }
    }

    Ok(FederationOutcome {
        metrics,
        final_model,
        audit: authority.audit(),
        traces,
    })
}
