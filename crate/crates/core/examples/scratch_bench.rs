// Scratch profiling harness (not part of the deliverable).
use std::time::Instant;

use ctlmc_core::formula::StateFormula;
use ctlmc_core::kripke::KripkeBuilder;
use ctlmc_core::oracle::denotation;
use ctlmc_core::prover::prove;

use rand::prelude::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ATOMS: [&str; 3] = ["p", "q", "r"];

fn random_model(rng: &mut ChaCha8Rng) -> ctlmc_core::kripke::KripkeStructure {
    let n = rng.random_range(2..=6);
    let density: f64 = rng.random();
    let mut b = KripkeBuilder::new();
    let ids: Vec<_> = (0..n).map(|i| b.add_state(&format!("s{i}")).unwrap()).collect();
    for &from in &ids {
        for &to in &ids {
            if rng.random::<f64>() < density {
                b.add_transition(from, to);
            }
        }
    }
    for &s in &ids {
        for atom in ATOMS {
            if rng.random::<bool>() {
                b.add_label(s, atom);
            }
        }
    }
    b.finish()
}

fn enumerate_formulas(max_size: usize) -> Vec<StateFormula> {
    use ctlmc_core::formula::{Modality, PathQuantifier};
    let mut by_size: Vec<Vec<StateFormula>> = vec![Vec::new(); max_size + 1];
    by_size[1] = vec![StateFormula::atom("p"), StateFormula::neg_atom("p"), StateFormula::atom("q")];
    for size in 2..=max_size {
        let mut bucket = Vec::new();
        for q in [PathQuantifier::Exists, PathQuantifier::All] {
            for m in [Modality::Next, Modality::Finally, Modality::Globally] {
                for body in &by_size[size - 1] {
                    bucket.push(StateFormula::temporal(q, m, body.clone()));
                }
            }
        }
        for left_size in 1..size.saturating_sub(1) {
            let right_size = size - 1 - left_size;
            for left in &by_size[left_size] {
                for right in &by_size[right_size] {
                    bucket.push(StateFormula::and(left.clone(), right.clone()));
                    bucket.push(StateFormula::or(left.clone(), right.clone()));
                }
            }
        }
        by_size[size] = bucket;
    }
    by_size.concat()
}

fn main() {
    let enumeration = enumerate_formulas(5);
    println!("enumeration: {} formulas", enumeration.len());
    let mut rng = ChaCha8Rng::seed_from_u64(0xc71c_2026);

    let models: Vec<_> = (0..60).map(|_| random_model(&mut rng)).collect();

    let mut oracle_time = 0.0;
    let mut true_time = 0.0;
    let mut false_time = 0.0;
    let (mut true_count, mut false_count) = (0u64, 0u64);
    let mut expanded_total: u64 = 0;
    let mut worst: Vec<(f64, String, usize, bool)> = Vec::new();

    for m in &models {
        for f in &enumeration {
            let t0 = Instant::now();
            let den = denotation(m, f, &m.empty_set()).unwrap();
            oracle_time += t0.elapsed().as_secs_f64();
            for s in m.states() {
                let expect = den.contains(s);
                let t1 = Instant::now();
                let v = prove(m, s, f);
                let dt = t1.elapsed().as_secs_f64();
                expanded_total += v.stats.expanded;
                assert_eq!(v.holds(), expect);
                if expect {
                    true_time += dt;
                    true_count += 1;
                } else {
                    false_time += dt;
                    false_count += 1;
                }
                worst.push((dt, f.to_string(), m.state_count(), expect));
                if worst.len() > 4000 {
                    worst.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
                    worst.truncate(10);
                }
            }
        }
    }
    worst.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    worst.truncate(10);
    println!("60 models x {} formulas", enumeration.len());
    println!(
        "oracle: {oracle_time:.2}s  prove(true): {true_time:.2}s/{true_count}  prove(false): {false_time:.2}s/{false_count}  expanded: {expanded_total}"
    );
    println!(
        "extrapolated to 500 models: oracle {:.0}s  true {:.0}s  false {:.0}s",
        oracle_time * 8.33,
        true_time * 8.33,
        false_time * 8.33
    );
    for (t, f, n, holds) in &worst {
        println!("  worst: {t:.4}s  |S|={n} holds={holds}  {f}");
    }
    let _ = rng.random::<u64>();
}
