//! Alice, Bob and the pair broker as separate endpoints exchanging
//! line-framed records, over memory pipes and over TCP loopback.

use earac::codetree;
use earac::session::{self, SessionConfig, TransportKind};

fn main() -> earac::Result<()> {
    let tree = codetree::build_paper_tree(5)?;
    let bits = [0, 1, 1, 0, 1];
    let config = SessionConfig {
        broker_seed: 7,
        sr_seed: None,
    };
    let inproc = session::run_session(&tree, &bits, 4, TransportKind::InProcess, config)?;
    print!("{}", inproc.to_transcript_text());
    println!(
        "guess {} for bit {}; classical bits Alice->Bob {}; Alice measured {:?}, Bob {:?}",
        inproc.guess,
        bits[4],
        inproc.classical_bits(),
        inproc.measures_by(session::Peer::Alice),
        inproc.measures_by(session::Peer::Bob)
    );

    let tcp = session::run_session(&tree, &bits, 4, TransportKind::TcpLoopback, config)?;
    println!("TCP loopback transcript identical: {}", tcp == inproc);

    let shuffled = SessionConfig {
        broker_seed: 7,
        sr_seed: Some(99),
    };
    let sr = session::run_session(&tree, &bits, 4, TransportKind::InProcess, shuffled)?;
    println!("with shared permutation {:?}: guess {}", session::shared_permutation(99, 5), sr.guess);
    Ok(())
}
