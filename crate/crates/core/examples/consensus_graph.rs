// Decentralized consensus ADMM on a graph read from an edge list. Each node
// holds `a_i/2 (x - c_i)^2`; the network agrees on the weighted mean.

use opsplit::admm::{run_distributed_admm, DistributedProblem, Graph};
use opsplit::experiments::problems::centered_square;
use opsplit::{Error, Result};

pub fn run_example() -> Result<()> {
    let graph = Graph::parse_edge_list("0 1\n1 2\n2 3\n3 0\n1 3\n")?;
    let weights = [(1.0, 2.0), (0.5, -1.0), (2.0, 0.0), (1.5, 3.0)];
    let locals = weights.iter().map(|(a, c)| centered_square(*a, *c)).collect::<Result<Vec<_>>>()?;
    let p = DistributedProblem::new(graph, locals, 1)?;
    let trace = run_distributed_admm(&p, 1.0, 500)?;
    let target = weights.iter().map(|(a, c)| a * c).sum::<f64>() / weights.iter().map(|(a, _)| a).sum::<f64>();
    let value = trace.consensus_value();
    println!("consensus {:.8}, weighted mean {target:.8}, messages sent {}", value[0], trace.messages.len());
    let off_edge = trace.messages.iter().filter(|m| !p.graph.has_edge(m.from, m.to)).count();
    if (value[0] - target).abs() > 1e-8 || off_edge > 0 {
        return Err(Error::InvalidArgument("consensus run did not agree on the mean".into()));
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("consensus example");
}
