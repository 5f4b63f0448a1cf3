//! Two-party execution over byte streams.
//!
//! Three components talk over duplex links:
//!
//! ```text
//!   Alice ──Measure/Outcome── Broker ──Measure/Outcome── Bob
//!     └──────────────── Classical (one bit) ──────────────┘
//! ```
//!
//! The broker stands in for the shared pairs. It is a simulation device: the
//! pair statistics cannot be produced by two independent local samplers, so a
//! trusted third component samples the first outcome of each pair uniformly
//! and the second conditioned on it. It opens each link with a `SETUP`
//! record. Bob's query is local configuration and never travels to Alice.
//!
//! # Wire format
//!
//! One record per line, UTF-8, fields in fixed order, single spaces:
//!
//! ```text
//! earac/1 SETUP version=1 n=5 sr_seed=none tree=E2(E2(L0,L1),E3(L2,L3,L4))
//! earac/1 MEASURE pair=0 axis=0.7071067811865475,0.7071067811865475,0
//! earac/1 OUTCOME pair=0 bit=1
//! earac/1 CLASSICAL bit=0
//! earac/1 QUERY leaf=4
//! earac/1 GUESS bit=1
//! ```
//!
//! Axis components use the shortest decimal form that parses back to the
//! same `f64`, so records round-trip bit-exactly.

use std::collections::VecDeque;
use std::fmt;
use std::io::{self, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::str::FromStr;
use std::sync::mpsc::{channel, Receiver, Sender};
use std::sync::{Arc, Mutex};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bloch::{BlochVector, PairSource, SingletPairs};
use crate::codetree::{CodeTree, CompiledTree, PathStep, Transcript};
use crate::error::{Error, Result};
use crate::primitives;

pub const WIRE_TAG: &str = "earac/1";
pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Setup {
    pub version: u32,
    pub n: usize,
    /// Tree expression, e.g. `E2(L0,L1)`.
    pub tree: String,
    /// Seed of the shared random string that permutes the bit-to-leaf
    /// assignment; `None` keeps the tree as given.
    pub sr_seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum WireMessage {
    Setup(Setup),
    Measure { pair_id: u32, axis: [f64; 3] },
    Outcome { pair_id: u32, bit: u8 },
    Classical { bit: u8 },
    Query { leaf: usize },
    Guess { bit: u8 },
}

impl fmt::Display for WireMessage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{WIRE_TAG} ")?;
        match self {
            WireMessage::Setup(s) => {
                write!(f, "SETUP version={} n={} sr_seed=", s.version, s.n)?;
                match s.sr_seed {
                    Some(seed) => write!(f, "{seed}")?,
                    None => f.write_str("none")?,
                }
                write!(f, " tree={}", s.tree)
            }
            WireMessage::Measure { pair_id, axis } => {
                write!(f, "MEASURE pair={pair_id} axis={},{},{}", axis[0], axis[1], axis[2])
            }
            WireMessage::Outcome { pair_id, bit } => write!(f, "OUTCOME pair={pair_id} bit={bit}"),
            WireMessage::Classical { bit } => write!(f, "CLASSICAL bit={bit}"),
            WireMessage::Query { leaf } => write!(f, "QUERY leaf={leaf}"),
            WireMessage::Guess { bit } => write!(f, "GUESS bit={bit}"),
        }
    }
}

struct Fields<'a> {
    line: &'a str,
    parts: std::str::SplitN<'a, char>,
}

impl<'a> Fields<'a> {
    fn error(&self, what: &str) -> Error {
        Error::Parse(format!("wire record {:?}: {what}", self.line))
    }

    fn field(&mut self, key: &str) -> Result<&'a str> {
        let part = self.parts.next().ok_or_else(|| self.error(&format!("missing {key}")))?;
        part.strip_prefix(key)
            .and_then(|rest| rest.strip_prefix('='))
            .ok_or_else(|| self.error(&format!("expected {key}=...")))
    }

    fn parse<T: FromStr>(&mut self, key: &str) -> Result<T> {
        let text = self.field(key)?;
        text.parse().map_err(|_| self.error(&format!("bad {key} value {text:?}")))
    }

    fn bit(&mut self) -> Result<u8> {
        match self.field("bit")? {
            "0" => Ok(0),
            "1" => Ok(1),
            other => Err(self.error(&format!("bit must be 0 or 1, got {other:?}"))),
        }
    }

    fn finish(mut self) -> Result<()> {
        match self.parts.next() {
            None => Ok(()),
            Some(extra) => Err(self.error(&format!("unexpected trailing field {extra:?}"))),
        }
    }
}

impl FromStr for WireMessage {
    type Err = Error;

    fn from_str(line: &str) -> Result<Self> {
        let line = line.strip_suffix('\n').unwrap_or(line);
        let mut parts = line.splitn(7, ' ');
        let bad = |what: &str| Error::Parse(format!("wire record {line:?}: {what}"));
        if parts.next() != Some(WIRE_TAG) {
            return Err(bad(&format!("expected tag {WIRE_TAG}")));
        }
        let kind = parts.next().ok_or_else(|| bad("missing record type"))?;
        let mut f = Fields { line, parts };
        let msg = match kind {
            "SETUP" => {
                let version = f.parse("version")?;
                let n = f.parse("n")?;
                let sr_seed = match f.field("sr_seed")? {
                    "none" => None,
                    text => Some(text.parse().map_err(|_| bad("bad sr_seed"))?),
                };
                let tree = f.field("tree")?.to_string();
                WireMessage::Setup(Setup {
                    version,
                    n,
                    tree,
                    sr_seed,
                })
            }
            "MEASURE" => {
                let pair_id = f.parse("pair")?;
                let text = f.field("axis")?;
                let comps: Vec<f64> = text
                    .split(',')
                    .map(str::parse)
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| bad("bad axis"))?;
                let axis: [f64; 3] = comps.try_into().map_err(|_| bad("axis needs 3 components"))?;
                WireMessage::Measure { pair_id, axis }
            }
            "OUTCOME" => {
                let pair_id = f.parse("pair")?;
                let bit = f.bit()?;
                WireMessage::Outcome { pair_id, bit }
            }
            "CLASSICAL" => WireMessage::Classical { bit: f.bit()? },
            "QUERY" => WireMessage::Query {
                leaf: f.parse("leaf")?,
            },
            "GUESS" => WireMessage::Guess { bit: f.bit()? },
            other => return Err(bad(&format!("unknown record type {other:?}"))),
        };
        f.finish()?;
        Ok(msg)
    }
}

/// Who a record was exchanged with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Peer {
    Alice,
    Bob,
    Broker,
    /// The endpoint's own configuration or result, not on any wire.
    Local,
}

impl fmt::Display for Peer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Peer::Alice => "alice",
            Peer::Bob => "bob",
            Peer::Broker => "broker",
            Peer::Local => "local",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Sent,
    Received,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WireRecord {
    pub endpoint: Peer,
    pub direction: Direction,
    pub peer: Peer,
    pub message: WireMessage,
}

impl fmt::Display for WireRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let arrow = match self.direction {
            Direction::Sent => "->",
            Direction::Received => "<-",
        };
        write!(f, "{} {arrow} {} {}", self.endpoint, self.peer, self.message)
    }
}

/// A duplex byte stream.
pub trait Duplex: Read + Write + Send {}

impl<T: Read + Write + Send> Duplex for T {}

/// One end of an in-memory duplex pipe. Dropping it closes the other end's
/// read side.
pub struct MemoryPipe {
    tx: Sender<Vec<u8>>,
    rx: Receiver<Vec<u8>>,
    pending: VecDeque<u8>,
}

impl MemoryPipe {
    pub fn pair() -> (MemoryPipe, MemoryPipe) {
        let (tx_a, rx_b) = channel();
        let (tx_b, rx_a) = channel();
        (
            MemoryPipe {
                tx: tx_a,
                rx: rx_a,
                pending: VecDeque::new(),
            },
            MemoryPipe {
                tx: tx_b,
                rx: rx_b,
                pending: VecDeque::new(),
            },
        )
    }
}

impl Read for MemoryPipe {
    fn read(&mut self, buf: &mut [u8]) -> io::Result<usize> {
        if self.pending.is_empty() {
            match self.rx.recv() {
                Ok(chunk) => self.pending.extend(chunk),
                Err(_) => return Ok(0),
            }
        }
        let n = buf.len().min(self.pending.len());
        for (dst, src) in buf.iter_mut().zip(self.pending.drain(..n)) {
            *dst = src;
        }
        Ok(n)
    }
}

impl Write for MemoryPipe {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        self.tx
            .send(buf.to_vec())
            .map_err(|_| io::Error::new(io::ErrorKind::BrokenPipe, "peer closed"))?;
        Ok(buf.len())
    }

    fn flush(&mut self) -> io::Result<()> {
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransportKind {
    InProcess,
    TcpLoopback,
}

impl FromStr for TransportKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "inproc" => Ok(TransportKind::InProcess),
            "tcp" => Ok(TransportKind::TcpLoopback),
            other => Err(Error::Parse(format!("unknown transport {other:?} (inproc|tcp)"))),
        }
    }
}

/// Two connected ends of a fresh duplex stream.
pub fn connect_pair(kind: TransportKind) -> Result<(Box<dyn Duplex>, Box<dyn Duplex>)> {
    match kind {
        TransportKind::InProcess => {
            let (a, b) = MemoryPipe::pair();
            Ok((Box::new(a), Box::new(b)))
        }
        TransportKind::TcpLoopback => {
            let listener = TcpListener::bind(("127.0.0.1", 0))?;
            let client = TcpStream::connect(listener.local_addr()?)?;
            let (server, _) = listener.accept()?;
            client.set_nodelay(true)?;
            server.set_nodelay(true)?;
            Ok((Box::new(client), Box::new(server)))
        }
    }
}

/// Line framing over a duplex stream, recording every record it carries.
pub struct Link {
    stream: Box<dyn Duplex>,
    buffer: Vec<u8>,
    endpoint: Peer,
    peer: Peer,
}

impl Link {
    pub fn new(stream: Box<dyn Duplex>, endpoint: Peer, peer: Peer) -> Self {
        Link {
            stream,
            buffer: Vec::new(),
            endpoint,
            peer,
        }
    }

    pub fn send(&mut self, msg: &WireMessage, log: &mut Vec<WireRecord>) -> Result<()> {
        log.push(WireRecord {
            endpoint: self.endpoint,
            direction: Direction::Sent,
            peer: self.peer,
            message: msg.clone(),
        });
        let line = format!("{msg}\n");
        self.stream.write_all(line.as_bytes())?;
        self.stream.flush()?;
        Ok(())
    }

    /// Next record, or `None` once the peer has closed the stream.
    pub fn recv(&mut self, log: &mut Vec<WireRecord>) -> Result<Option<WireMessage>> {
        loop {
            if let Some(end) = self.buffer.iter().position(|&b| b == b'\n') {
                let line: Vec<u8> = self.buffer.drain(..=end).collect();
                let text = std::str::from_utf8(&line[..end])
                    .map_err(|_| Error::Parse("wire record is not UTF-8".into()))?;
                let msg: WireMessage = text.parse()?;
                log.push(WireRecord {
                    endpoint: self.endpoint,
                    direction: Direction::Received,
                    peer: self.peer,
                    message: msg.clone(),
                });
                return Ok(Some(msg));
            }
            let mut chunk = [0u8; 512];
            let n = match self.stream.read(&mut chunk) {
                Ok(n) => n,
                Err(e) if e.kind() == io::ErrorKind::ConnectionReset => 0,
                Err(e) => return Err(e.into()),
            };
            if n == 0 {
                if self.buffer.is_empty() {
                    return Ok(None);
                }
                return Err(Error::Protocol("stream closed mid-record".into()));
            }
            self.buffer.extend_from_slice(&chunk[..n]);
        }
    }

    fn expect(&mut self, log: &mut Vec<WireRecord>) -> Result<WireMessage> {
        self.recv(log)?.ok_or_else(|| {
            Error::Protocol(format!("{} closed the link to {}", self.peer, self.endpoint))
        })
    }
}

/// Shared random permutation of leaf labels.
pub fn shared_permutation(sr_seed: u64, n: usize) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(sr_seed));
    perm
}

fn agreed_tree(setup: &Setup) -> Result<CodeTree> {
    if setup.version != PROTOCOL_VERSION {
        return Err(Error::Protocol(format!(
            "unsupported protocol version {}",
            setup.version
        )));
    }
    let tree: CodeTree = setup.tree.parse()?;
    if tree.leaf_count() != setup.n {
        return Err(Error::Protocol(format!(
            "setup announces n={} but the tree has {} leaves",
            setup.n,
            tree.leaf_count()
        )));
    }
    match setup.sr_seed {
        Some(seed) => tree.permute_leaves(&shared_permutation(seed, setup.n)),
        None => Ok(tree),
    }
}

type Outgoing = Vec<(Peer, WireMessage)>;

#[derive(Debug, Clone, PartialEq, Eq)]
enum AliceState {
    AwaitSetup,
    Measuring { node: u32 },
    Done,
}

/// Alice's state machine: measures every pair bottom-up through the broker,
/// then sends the single classical bit to Bob.
#[derive(Debug, Clone)]
pub struct AliceEndpoint {
    bits: Vec<u8>,
    state: AliceState,
    tree: Option<CompiledTree>,
    outputs: Vec<u8>,
    inputs: Vec<u8>,
}

impl AliceEndpoint {
    pub fn new(bits: Vec<u8>) -> Self {
        AliceEndpoint {
            bits,
            state: AliceState::AwaitSetup,
            tree: None,
            outputs: Vec::new(),
            inputs: Vec::new(),
        }
    }

    pub fn is_done(&self) -> bool {
        self.state == AliceState::Done
    }

    fn node_inputs(&self, node: u32) -> Vec<u8> {
        let tree = self.tree.as_ref().expect("set at setup");
        tree.nodes()[node as usize]
            .children
            .iter()
            .map(|c| match *c {
                crate::codetree::Child::Leaf(i) => self.bits[i] & 1,
                crate::codetree::Child::Node(n) => self.outputs[n as usize],
            })
            .collect()
    }

    fn measure(&mut self, node: u32) -> Result<Outgoing> {
        let kind = self.tree.as_ref().expect("set at setup").nodes()[node as usize].kind;
        self.inputs = self.node_inputs(node);
        let axis = primitives::alice_basis(kind, &self.inputs)?.components();
        self.state = AliceState::Measuring { node };
        Ok(vec![(Peer::Broker, WireMessage::Measure { pair_id: node, axis })])
    }

    fn finish(&mut self) -> Outgoing {
        let tree = self.tree.as_ref().expect("set at setup");
        let bit = match tree.root() {
            crate::codetree::Child::Leaf(i) => self.bits[i] & 1,
            crate::codetree::Child::Node(n) => self.outputs[n as usize],
        };
        self.state = AliceState::Done;
        vec![(Peer::Bob, WireMessage::Classical { bit })]
    }

    pub fn on_message(&mut self, from: Peer, msg: WireMessage) -> Result<Outgoing> {
        match (&self.state, from, msg) {
            (AliceState::AwaitSetup, Peer::Broker, WireMessage::Setup(setup)) => {
                let tree = agreed_tree(&setup)?;
                if tree.leaf_count() != self.bits.len() {
                    return Err(Error::InvalidSize(format!(
                        "Alice holds {} bits but the code takes {}",
                        self.bits.len(),
                        tree.leaf_count()
                    )));
                }
                self.tree = Some(tree.compile()?);
                if tree.ebit_count() == 0 {
                    Ok(self.finish())
                } else {
                    self.measure(0)
                }
            }
            (AliceState::Measuring { node }, Peer::Broker, WireMessage::Outcome { pair_id, bit })
                if pair_id == *node =>
            {
                let node = *node;
                self.outputs.push(primitives::node_output(&self.inputs, bit));
                let total = self.tree.as_ref().expect("set at setup").nodes().len() as u32;
                if node + 1 < total {
                    self.measure(node + 1)
                } else {
                    Ok(self.finish())
                }
            }
            (state, from, msg) => Err(Error::Protocol(format!(
                "Alice in state {state:?} cannot accept {msg} from {from}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum BobState {
    AwaitSetup,
    AwaitClassical,
    Measuring { step: usize },
    Done,
}

/// Bob's state machine: after the classical bit arrives, measures the pairs
/// on the path to his query and emits a guess.
#[derive(Debug, Clone)]
pub struct BobEndpoint {
    query: Option<usize>,
    state: BobState,
    path: Vec<PathStep>,
    guess: u8,
}

impl Default for BobEndpoint {
    fn default() -> Self {
        Self::new()
    }
}

impl BobEndpoint {
    pub fn new() -> Self {
        BobEndpoint {
            query: None,
            state: BobState::AwaitSetup,
            path: Vec::new(),
            guess: 0,
        }
    }

    pub fn is_done(&self) -> bool {
        self.state == BobState::Done
    }

    fn measure(&mut self, step: usize) -> Result<Outgoing> {
        let s = self.path[step];
        let axis = primitives::bob_basis(s.kind, s.child)?.components();
        self.state = BobState::Measuring { step };
        Ok(vec![(Peer::Broker, WireMessage::Measure { pair_id: s.node, axis })])
    }

    fn finish(&mut self) -> Outgoing {
        self.state = BobState::Done;
        vec![(Peer::Local, WireMessage::Guess { bit: self.guess })]
    }

    pub fn on_message(&mut self, from: Peer, msg: WireMessage) -> Result<Outgoing> {
        match (&self.state, from, msg) {
            (BobState::AwaitSetup | BobState::AwaitClassical, Peer::Local, WireMessage::Query { leaf })
                if self.query.is_none() =>
            {
                self.query = Some(leaf);
                Ok(Vec::new())
            }
            (BobState::AwaitSetup, Peer::Broker, WireMessage::Setup(setup)) => {
                let tree = agreed_tree(&setup)?.compile()?;
                let leaf = self
                    .query
                    .ok_or_else(|| Error::Protocol("Bob received setup before his query".into()))?;
                self.path = tree.path(leaf)?.to_vec();
                self.state = BobState::AwaitClassical;
                Ok(Vec::new())
            }
            (BobState::AwaitClassical, Peer::Alice, WireMessage::Classical { bit }) => {
                self.guess = bit;
                if self.path.is_empty() {
                    Ok(self.finish())
                } else {
                    self.measure(0)
                }
            }
            (BobState::Measuring { step }, Peer::Broker, WireMessage::Outcome { pair_id, bit })
                if pair_id == self.path[*step].node =>
            {
                let step = *step;
                self.guess = primitives::decode_guess(self.guess, &[bit]);
                if step + 1 < self.path.len() {
                    self.measure(step + 1)
                } else {
                    Ok(self.finish())
                }
            }
            (state, from, msg) => Err(Error::Protocol(format!(
                "Bob in state {state:?} cannot accept {msg} from {from}"
            ))),
        }
    }
}

/// The pair service: per pair, the first request gets a uniform bit and the
/// second a bit correlated with it; a third request is an error.
#[derive(Debug)]
pub struct Broker {
    pairs: SingletPairs<ChaCha8Rng>,
}

impl Broker {
    pub fn new(pair_count: u32, seed: u64) -> Self {
        Broker {
            pairs: SingletPairs::new(pair_count, ChaCha8Rng::seed_from_u64(seed)),
        }
    }

    /// Answers one `Measure` request with an `Outcome`.
    pub fn serve(&mut self, request: &WireMessage) -> Result<WireMessage> {
        match request {
            WireMessage::Measure { pair_id, axis } => {
                let axis = BlochVector::new(axis[0], axis[1], axis[2])?;
                let bit = self.pairs.measure(*pair_id, &axis)?;
                Ok(WireMessage::Outcome {
                    pair_id: *pair_id,
                    bit,
                })
            }
            other => Err(Error::Protocol(format!("broker cannot serve {other}"))),
        }
    }
}

/// Serves a batch of requests in order.
pub fn broker_serve(broker: &mut Broker, requests: &[WireMessage]) -> Result<Vec<WireMessage>> {
    requests.iter().map(|r| broker.serve(r)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SessionConfig {
    /// Seed of the broker's sampler.
    pub broker_seed: u64,
    pub sr_seed: Option<u64>,
}

/// Everything a session exchanged, per endpoint and in order.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionResult {
    pub guess: u8,
    pub alice: Vec<WireRecord>,
    pub bob: Vec<WireRecord>,
    /// The broker's link to Alice followed by its link to Bob.
    pub broker: Vec<WireRecord>,
}

impl SessionResult {
    /// Classical records Alice sent to Bob.
    pub fn classical_bits(&self) -> usize {
        self.alice
            .iter()
            .filter(|r| {
                r.direction == Direction::Sent
                    && r.peer == Peer::Bob
                    && matches!(r.message, WireMessage::Classical { .. })
            })
            .count()
    }

    pub fn measures_by(&self, endpoint: Peer) -> Vec<u32> {
        let log = match endpoint {
            Peer::Alice => &self.alice,
            Peer::Bob => &self.bob,
            _ => return Vec::new(),
        };
        log.iter()
            .filter_map(|r| match r.message {
                WireMessage::Measure { pair_id, .. } if r.direction == Direction::Sent => Some(pair_id),
                _ => None,
            })
            .collect()
    }

    /// All records, one per line: Alice's, then Bob's, then the broker's.
    pub fn to_transcript_text(&self) -> String {
        self.alice
            .iter()
            .chain(&self.bob)
            .chain(&self.broker)
            .map(|r| format!("{r}\n"))
            .collect()
    }
}

fn run_alice(mut broker: Link, mut bob: Link, bits: Vec<u8>) -> Result<Vec<WireRecord>> {
    let mut log = Vec::new();
    let mut alice = AliceEndpoint::new(bits);
    let mut inbox = broker.expect(&mut log)?;
    loop {
        for (to, msg) in alice.on_message(Peer::Broker, inbox)? {
            match to {
                Peer::Broker => broker.send(&msg, &mut log)?,
                Peer::Bob => bob.send(&msg, &mut log)?,
                _ => unreachable!("Alice only talks to the broker and Bob"),
            }
        }
        if alice.is_done() {
            return Ok(log);
        }
        inbox = broker.expect(&mut log)?;
    }
}

fn run_bob(mut broker: Link, mut alice: Link, target: usize) -> Result<(u8, Vec<WireRecord>)> {
    let mut log = Vec::new();
    let mut bob = BobEndpoint::new();
    let query = WireMessage::Query { leaf: target };
    log.push(WireRecord {
        endpoint: Peer::Bob,
        direction: Direction::Received,
        peer: Peer::Local,
        message: query.clone(),
    });
    bob.on_message(Peer::Local, query)?;
    let setup = broker.expect(&mut log)?;
    bob.on_message(Peer::Broker, setup)?;
    let mut from = Peer::Alice;
    let mut inbox = alice.expect(&mut log)?;
    loop {
        for (to, msg) in bob.on_message(from, inbox)? {
            match (to, msg) {
                (Peer::Broker, msg) => broker.send(&msg, &mut log)?,
                (Peer::Local, WireMessage::Guess { bit }) => {
                    log.push(WireRecord {
                        endpoint: Peer::Bob,
                        direction: Direction::Sent,
                        peer: Peer::Local,
                        message: WireMessage::Guess { bit },
                    });
                    return Ok((bit, log));
                }
                _ => unreachable!("Bob only talks to the broker and reports locally"),
            }
        }
        from = Peer::Broker;
        inbox = broker.expect(&mut log)?;
    }
}

fn run_broker_link(broker: &Mutex<Broker>, mut link: Link, setup: &Setup) -> Result<Vec<WireRecord>> {
    let mut log = Vec::new();
    link.send(&WireMessage::Setup(setup.clone()), &mut log)?;
    while let Some(request) = link.recv(&mut log)? {
        let reply = broker.lock().expect("broker lock").serve(&request)?;
        link.send(&reply, &mut log)?;
    }
    Ok(log)
}

/// Runs one complete session with Alice, Bob and the broker on separate
/// threads, connected by `transport`.
pub fn run_session(
    tree: &CodeTree,
    bits: &[u8],
    target: usize,
    transport: TransportKind,
    config: SessionConfig,
) -> Result<SessionResult> {
    tree.validate()?;
    if bits.len() != tree.leaf_count() {
        return Err(Error::InvalidSize(format!(
            "{} bits for a {}-bit code",
            bits.len(),
            tree.leaf_count()
        )));
    }
    if target >= tree.leaf_count() {
        return Err(Error::UnknownLeaf(target));
    }
    let setup = Setup {
        version: PROTOCOL_VERSION,
        n: tree.leaf_count(),
        tree: tree.to_string(),
        sr_seed: config.sr_seed,
    };
    let broker = Arc::new(Mutex::new(Broker::new(tree.ebit_count() as u32, config.broker_seed)));

    let (alice_to_broker, broker_to_alice) = connect_pair(transport)?;
    let (bob_to_broker, broker_to_bob) = connect_pair(transport)?;
    let (alice_to_bob, bob_to_alice) = connect_pair(transport)?;

    let bits = bits.to_vec();
    std::thread::scope(|s| {
        let broker_a = {
            let broker = Arc::clone(&broker);
            let setup = &setup;
            s.spawn(move || {
                run_broker_link(&broker, Link::new(broker_to_alice, Peer::Broker, Peer::Alice), setup)
            })
        };
        let broker_b = {
            let broker = Arc::clone(&broker);
            let setup = &setup;
            s.spawn(move || {
                run_broker_link(&broker, Link::new(broker_to_bob, Peer::Broker, Peer::Bob), setup)
            })
        };
        let alice = s.spawn(move || {
            run_alice(
                Link::new(alice_to_broker, Peer::Alice, Peer::Broker),
                Link::new(alice_to_bob, Peer::Alice, Peer::Bob),
                bits,
            )
        });
        let bob = s.spawn(move || {
            run_bob(
                Link::new(bob_to_broker, Peer::Bob, Peer::Broker),
                Link::new(bob_to_alice, Peer::Bob, Peer::Alice),
                target,
            )
        });
        let broker_a = join(broker_a.join());
        let broker_b = join(broker_b.join());
        let alice = join(alice.join());
        let bob = join(bob.join());
        // broker failures are the root cause of endpoint disconnects
        let mut broker_log = broker_a?;
        broker_log.extend(broker_b?);
        let alice = alice?;
        let (guess, bob) = bob?;
        Ok(SessionResult {
            guess,
            alice,
            bob,
            broker: broker_log,
        })
    })
}

fn join<T>(r: std::thread::Result<Result<T>>) -> Result<T> {
    r.map_err(|_| Error::Invariant("session thread panicked".into()))?
}

/// The same run composed from in-process encode/decode with the same
/// sampler seed and shared permutation, for equivalence checks.
pub fn reference_run(
    tree: &CodeTree,
    bits: &[u8],
    target: usize,
    config: SessionConfig,
) -> Result<(u8, Transcript, Transcript)> {
    let tree = match config.sr_seed {
        Some(seed) => tree.permute_leaves(&shared_permutation(seed, tree.leaf_count()))?,
        None => tree.clone(),
    };
    let compiled = tree.compile()?;
    let mut pairs = SingletPairs::new(
        tree.ebit_count() as u32,
        ChaCha8Rng::seed_from_u64(config.broker_seed),
    );
    let (message, alice) = compiled.encode(bits, &mut pairs as &mut dyn PairSource)?;
    let (guess, bob) = compiled.decode(message, target, &mut pairs)?;
    Ok((guess, alice, bob))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codetree::build_paper_tree;

    fn config(seed: u64) -> SessionConfig {
        SessionConfig {
            broker_seed: seed,
            sr_seed: None,
        }
    }

    #[test]
    fn wire_round_trip() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let messages = [
            WireMessage::Setup(Setup {
                version: 1,
                n: 5,
                tree: "E2(E2(L0,L1),E3(L2,L3,L4))".into(),
                sr_seed: None,
            }),
            WireMessage::Setup(Setup {
                version: 1,
                n: 2,
                tree: "E2(L0,L1)".into(),
                sr_seed: Some(42),
            }),
            WireMessage::Measure {
                pair_id: 3,
                axis: [s, -s, 0.0],
            },
            WireMessage::Outcome { pair_id: 3, bit: 1 },
            WireMessage::Classical { bit: 0 },
            WireMessage::Query { leaf: 4 },
            WireMessage::Guess { bit: 1 },
        ];
        for m in messages {
            let text = m.to_string();
            assert!(!text.contains('\n'));
            assert_eq!(text.parse::<WireMessage>().unwrap(), m, "{text}");
        }
        assert_eq!(
            WireMessage::Outcome { pair_id: 0, bit: 1 }.to_string(),
            "earac/1 OUTCOME pair=0 bit=1"
        );
        assert_eq!(
            WireMessage::Measure {
                pair_id: 0,
                axis: [1.0, 0.0, 0.0]
            }
            .to_string(),
            "earac/1 MEASURE pair=0 axis=1,0,0"
        );
    }

    #[test]
    fn malformed_records() {
        for bad in [
            "",
            "earac/2 GUESS bit=1",
            "earac/1 GUESS bit=2",
            "earac/1 GUESS",
            "earac/1 GUESS bit=1 extra=3",
            "earac/1 OUTCOME bit=1 pair=0",
            "earac/1 MEASURE pair=0 axis=1,0",
            "earac/1 HELLO",
            "earac/1 SETUP version=1 n=2 sr_seed=x tree=E2(L0,L1)",
        ] {
            assert!(bad.parse::<WireMessage>().is_err(), "{bad:?}");
        }
    }

    #[test]
    fn two_bit_session_message_counts() {
        let tree = build_paper_tree(2).unwrap();
        let result = run_session(&tree, &[1, 0], 1, TransportKind::InProcess, config(7)).unwrap();
        let count = |log: &[WireRecord], pred: &dyn Fn(&WireMessage) -> bool| {
            log.iter().filter(|r| pred(&r.message)).count()
        };
        let is_setup = |m: &WireMessage| matches!(m, WireMessage::Setup(_));
        assert_eq!(count(&result.alice, &is_setup), 1);
        assert_eq!(count(&result.bob, &is_setup), 1);
        let broker_measures = result
            .broker
            .iter()
            .filter(|r| r.direction == Direction::Received && matches!(r.message, WireMessage::Measure { .. }))
            .count();
        let broker_outcomes = result
            .broker
            .iter()
            .filter(|r| r.direction == Direction::Sent && matches!(r.message, WireMessage::Outcome { .. }))
            .count();
        assert_eq!((broker_measures, broker_outcomes), (2, 2));
        assert_eq!(result.classical_bits(), 1);
        assert_eq!(count(&result.bob, &|m| matches!(m, WireMessage::Guess { .. })), 1);
    }

    #[test]
    fn five_bit_session_measures_only_the_path() {
        let tree = build_paper_tree(5).unwrap();
        let result = run_session(&tree, &[0, 1, 1, 0, 1], 4, TransportKind::InProcess, config(3)).unwrap();
        assert_eq!(result.measures_by(Peer::Alice), vec![0, 1, 2]);
        assert_eq!(result.measures_by(Peer::Bob), vec![2, 1]);
    }

    #[test]
    fn matches_in_process_composition() {
        for n in 1..=7 {
            let tree = build_paper_tree(n).unwrap();
            for seed in 0..8u64 {
                let bits: Vec<u8> = (0..n).map(|i| ((seed >> (i % 3)) & 1) as u8 ^ (i % 2) as u8).collect();
                let target = (seed as usize) % n;
                for sr_seed in [None, Some(seed + 100)] {
                    let cfg = SessionConfig {
                        broker_seed: seed,
                        sr_seed,
                    };
                    let session = run_session(&tree, &bits, target, TransportKind::InProcess, cfg).unwrap();
                    let (guess, alice, bob) = reference_run(&tree, &bits, target, cfg).unwrap();
                    assert_eq!(session.guess, guess);
                    let outcomes = |log: &[WireRecord]| -> Vec<u8> {
                        log.iter()
                            .filter_map(|r| match r.message {
                                WireMessage::Outcome { bit, .. } => Some(bit),
                                _ => None,
                            })
                            .collect()
                    };
                    let axes = |log: &[WireRecord]| -> Vec<[f64; 3]> {
                        log.iter()
                            .filter_map(|r| match r.message {
                                WireMessage::Measure { axis, .. } => Some(axis),
                                _ => None,
                            })
                            .collect()
                    };
                    let ref_alice: Vec<u8> = alice.entries.iter().map(|e| e.outcome).collect();
                    let ref_bob: Vec<u8> = bob.entries.iter().map(|e| e.outcome).collect();
                    assert_eq!(outcomes(&session.alice), ref_alice);
                    assert_eq!(outcomes(&session.bob), ref_bob);
                    let ref_axes: Vec<[f64; 3]> = alice.entries.iter().map(|e| e.basis.components()).collect();
                    assert_eq!(axes(&session.alice), ref_axes);
                }
            }
        }
    }

    #[test]
    fn tcp_matches_in_process() {
        let tree = build_paper_tree(4).unwrap();
        let cfg = SessionConfig {
            broker_seed: 5,
            sr_seed: Some(9),
        };
        let a = run_session(&tree, &[1, 1, 0, 1], 2, TransportKind::InProcess, cfg).unwrap();
        let b = run_session(&tree, &[1, 1, 0, 1], 2, TransportKind::TcpLoopback, cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_transcript_text(), b.to_transcript_text());
    }

    #[test]
    fn leaf_session() {
        let tree = CodeTree::Leaf(0);
        let result = run_session(&tree, &[1], 0, TransportKind::InProcess, config(1)).unwrap();
        assert_eq!(result.guess, 1);
        assert_eq!(result.classical_bits(), 1);
        assert!(result.measures_by(Peer::Bob).is_empty());
    }

    #[test]
    fn order_violations() {
        let setup = WireMessage::Setup(Setup {
            version: 1,
            n: 2,
            tree: "E2(L0,L1)".into(),
            sr_seed: None,
        });
        let mut bob = BobEndpoint::new();
        assert!(matches!(
            bob.on_message(Peer::Alice, WireMessage::Classical { bit: 0 }),
            Err(Error::Protocol(_))
        ));
        let mut bob = BobEndpoint::new();
        assert!(matches!(bob.on_message(Peer::Broker, setup.clone()), Err(Error::Protocol(_))));

        let mut alice = AliceEndpoint::new(vec![0, 1]);
        assert!(matches!(
            alice.on_message(Peer::Broker, WireMessage::Outcome { pair_id: 0, bit: 0 }),
            Err(Error::Protocol(_))
        ));
        let mut alice = AliceEndpoint::new(vec![0, 1]);
        alice.on_message(Peer::Broker, setup.clone()).unwrap();
        assert!(matches!(
            alice.on_message(Peer::Broker, WireMessage::Outcome { pair_id: 5, bit: 0 }),
            Err(Error::Protocol(_))
        ));

        let mut alice = AliceEndpoint::new(vec![0, 1, 1]);
        assert!(matches!(alice.on_message(Peer::Broker, setup), Err(Error::InvalidSize(_))));

        let bad_version = WireMessage::Setup(Setup {
            version: 2,
            n: 2,
            tree: "E2(L0,L1)".into(),
            sr_seed: None,
        });
        let mut alice = AliceEndpoint::new(vec![0, 1]);
        assert!(matches!(alice.on_message(Peer::Broker, bad_version), Err(Error::Protocol(_))));
    }

    #[test]
    fn broker_lifecycle() {
        let mut broker = Broker::new(1, 3);
        let req = WireMessage::Measure {
            pair_id: 0,
            axis: [1.0, 0.0, 0.0],
        };
        let out = broker_serve(&mut broker, &[req.clone(), req.clone()]).unwrap();
        assert_eq!(out.len(), 2);
        assert!(matches!(broker.serve(&req), Err(Error::PairExhausted(0))));
        let unknown = WireMessage::Measure {
            pair_id: 4,
            axis: [1.0, 0.0, 0.0],
        };
        assert!(matches!(broker.serve(&unknown), Err(Error::UnknownPair(4))));
        assert!(matches!(
            broker.serve(&WireMessage::Guess { bit: 0 }),
            Err(Error::Protocol(_))
        ));
    }

    #[test]
    fn broker_statistics() {
        const PAIRS: u32 = 100_000;
        let aligned = WireMessage::Measure {
            pair_id: 0,
            axis: [1.0, 0.0, 0.0],
        };
        let mut broker = Broker::new(PAIRS, 11);
        let mut equal_aligned = 0;
        for id in 0..PAIRS {
            let req = match &aligned {
                WireMessage::Measure { axis, .. } => WireMessage::Measure { pair_id: id, axis: *axis },
                _ => unreachable!(),
            };
            let out = broker_serve(&mut broker, &[req.clone(), req]).unwrap();
            equal_aligned += usize::from(out[0] == out[1]);
        }
        assert_eq!(equal_aligned, PAIRS as usize);

        let s = 1.0 / 3f64.sqrt();
        let mut broker = Broker::new(PAIRS, 12);
        let (mut equal, mut first_ones, mut second_ones) = (0u32, 0u32, 0u32);
        for id in 0..PAIRS {
            let a = WireMessage::Measure { pair_id: id, axis: [s, s, s] };
            let b = WireMessage::Measure { pair_id: id, axis: [1.0, 0.0, 0.0] };
            let out = broker_serve(&mut broker, &[a, b]).unwrap();
            let bit = |m: &WireMessage| match m {
                WireMessage::Outcome { bit, .. } => *bit,
                _ => unreachable!(),
            };
            equal += u32::from(bit(&out[0]) == bit(&out[1]));
            first_ones += u32::from(bit(&out[0]));
            second_ones += u32::from(bit(&out[1]));
        }
        let within = |count: u32, p: f64| {
            let t = f64::from(PAIRS);
            ((f64::from(count) / t) - p).abs() < 4.0 * (p * (1.0 - p) / t).sqrt()
        };
        assert!(within(equal, 0.5 * (1.0 + s)));
        assert!(within(first_ones, 0.5));
        assert!(within(second_ones, 0.5));
    }

    #[test]
    fn bad_session_arguments() {
        let tree = build_paper_tree(3).unwrap();
        assert!(run_session(&tree, &[0, 1], 0, TransportKind::InProcess, config(0)).is_err());
        assert!(matches!(
            run_session(&tree, &[0, 1, 1], 3, TransportKind::InProcess, config(0)),
            Err(Error::UnknownLeaf(3))
        ));
    }

    #[test]
    fn memory_pipe_eof() {
        let (mut a, b) = MemoryPipe::pair();
        drop(b);
        let mut buf = [0u8; 4];
        assert_eq!(a.read(&mut buf).unwrap(), 0);
        assert!(a.write(b"x").is_err());
    }
}
