// Scratch harness for sizing the interference fixture; not part of the
// deliverable surface.

use groundstream::data::{
    build_vocab, domain_seed, synth_domain, AttributeKb, ConceptSpec, DomainDataset, DomainSpec,
};
use groundstream::eval::{cross_matrix, eval_on_domain, forgetting, zero_shot_row};
use groundstream::model::AdamHyper;
use groundstream::paradigms::{
    train_joint, train_rehearsal, train_sequential, train_specialized, StreamOrder, TrainConfig,
};
use std::collections::BTreeMap;
use std::time::Instant;

fn fixture_specs(spread: f64, mag: f64, angle_step: f64, n_concepts: usize) -> (Vec<DomainSpec>, AttributeKb) {
    let f = 16;
    let specs = (0..5)
        .map(|k| {
            let concepts = (0..n_concepts)
                .map(|j| {
                    let theta = ((k as f64) * angle_step
                        + (j as f64) * 360.0 / n_concepts as f64)
                        .to_radians();
                    let mut mean = vec![0.0; f];
                    mean[0] = mag * theta.cos();
                    mean[1] = mag * theta.sin();
                    ConceptSpec {
                        name: format!("noun{k}x{j}"),
                        template: format!("adj{k}x{j} noun{k}x{j}"),
                        cluster_mean: mean,
                    }
                })
                .collect();
            DomainSpec {
                domain_id: format!("site{}", (b'A' + k as u8) as char),
                feature_dim: f,
                regions_per_sample: 8,
                phrases_per_sample: 2,
                concepts_per_sample: 1,
                positives_per_concept: 2,
                train_count: 200,
                test_count: 100,
                cluster_spread: spread,
                vocab_overlap: 0.0,
                concepts,
            }
        })
        .collect();
    (specs, AttributeKb::new())
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let spread: f64 = args.get(1).map_or(1.5, |s| s.parse().unwrap());
    let mag: f64 = args.get(2).map_or(4.0, |s| s.parse().unwrap());
    let angle_step: f64 = args.get(3).map_or(36.0, |s| s.parse().unwrap());
    let n_concepts: usize = args.get(4).map_or(8, |s| s.parse().unwrap());
    println!("spread {spread}, mag {mag}, angle_step {angle_step}, n_concepts {n_concepts}");
    let (specs, kb) = fixture_specs(spread, mag, angle_step, n_concepts);
    for seed in [101u64, 102, 103, 104, 105] {
        let t0 = Instant::now();
        let vocab = build_vocab(&specs, &kb, seed).unwrap();
        let datasets: Vec<DomainDataset> = specs
            .iter()
            .map(|s| synth_domain(s, &kb, &vocab, domain_seed(seed, &s.domain_id)).unwrap())
            .collect();
        let ids: Vec<String> = datasets.iter().map(|d| d.domain_id.clone()).collect();
        let cfg = TrainConfig {
            epochs_per_step: 30,
            batch_size: 8,
            replay_ratio: 0.25,
            buffer_capacity: 100,
            embed_dim: 8,
            hyper: AdamHyper {
                base_lr: 0.02,
                text_lr: 0.002,
                ..AdamHyper::default()
            },
            seed,
        };
        let testsets: Vec<(String, &[Sample2])> = vec![];
        let _ = testsets;
        let tests: Vec<(String, &[groundstream::data::Sample])> = datasets
            .iter()
            .map(|d| (d.domain_id.clone(), d.test.as_slice()))
            .collect();

        // specialized
        let spec_ckpts = train_specialized(&datasets, &cfg).unwrap();
        let rows: Vec<(String, &groundstream::model::ModelParams)> = spec_ckpts
            .iter()
            .map(|c| (c.domain_id.clone(), &c.params))
            .collect();
        let spec_m = cross_matrix(&rows, &tests).unwrap();
        let t_spec = t0.elapsed().as_secs_f64();

        // zero-shot
        let zs = zero_shot_row(16, vocab.len(), 8, seed, &tests).unwrap();

        // sequential
        let t1 = Instant::now();
        let order = StreamOrder::new(ids.clone()).unwrap();
        let seq = train_sequential(&order, &datasets[..], &cfg).unwrap();
        let t_seq = t1.elapsed().as_secs_f64();

        // rehearsal
        let t2 = Instant::now();
        let reh = train_rehearsal(&order, &datasets[..], &cfg).unwrap();
        let t_reh = t2.elapsed().as_secs_f64();

        // joint
        let t3 = Instant::now();
        let joint = train_joint(&datasets, &cfg).unwrap();
        let t_joint = t3.elapsed().as_secs_f64();

        // metrics
        let diag: Vec<f64> = ids
            .iter()
            .map(|id| spec_m.value(id, id).unwrap())
            .collect();
        let mut dominated = 0;
        for (j, id) in ids.iter().enumerate() {
            let mut off = 0.0;
            for (i, rid) in ids.iter().enumerate() {
                if i != j {
                    off += spec_m.value(rid, id).unwrap();
                }
            }
            off /= (ids.len() - 1) as f64;
            if diag[j] > off {
                dominated += 1;
            }
        }
        let diag_mean: f64 = diag.iter().sum::<f64>() / diag.len() as f64;
        let zs_avg = zs.avg[0];

        // step curves for CL paradigms
        let curve = |ckpts: &[groundstream::paradigms::Checkpoint], dom: &str| -> Vec<f64> {
            ckpts
                .iter()
                .map(|c| {
                    let ds = datasets.iter().find(|d| d.domain_id == dom).unwrap();
                    eval_on_domain(&c.params, &ds.test).unwrap().ap
                })
                .collect()
        };
        let mut seq_curves = BTreeMap::new();
        let mut reh_curves = BTreeMap::new();
        for id in &ids {
            seq_curves.insert(id.clone(), curve(&seq, id));
            reh_curves.insert(id.clone(), curve(&reh.checkpoints, id));
        }
        let learn: BTreeMap<String, usize> = ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), i + 1))
            .collect();
        let f_seq = forgetting(&seq_curves, &learn).unwrap();
        let f_reh = forgetting(&reh_curves, &learn).unwrap();

        let final_avg = |params: &groundstream::model::ModelParams| -> f64 {
            let m = cross_matrix(&[("final".into(), params)], &tests).unwrap();
            m.avg[0]
        };
        let seq_avg = final_avg(&seq.last().unwrap().params);
        let reh_avg = final_avg(&reh.checkpoints.last().unwrap().params);
        let joint_avg = final_avg(&joint.params);

        println!("seed {seed}:");
        println!("  diag: {:?} (dominated {dominated}/5), mean {diag_mean:.3}", diag.iter().map(|v| (v * 1000.0).round() / 1000.0).collect::<Vec<_>>());
        println!("  zero-shot avg {zs_avg:.3} (gap {:.3})", diag_mean - zs_avg);
        println!(
            "  F_seq[{}] = {:.3}   F_reh[{}] = {:.3}",
            ids[0], f_seq[&ids[0]], ids[0], f_reh[&ids[0]]
        );
        println!("  seq curve site0: {:?}", seq_curves[&ids[0]].iter().map(|v| (v * 1000.0).round() / 1000.0).collect::<Vec<_>>());
        println!("  reh curve site0: {:?}", reh_curves[&ids[0]].iter().map(|v| (v * 1000.0).round() / 1000.0).collect::<Vec<_>>());
        println!(
            "  avgs: joint {joint_avg:.3} >= reh {reh_avg:.3} >= seq {seq_avg:.3}"
        );
        println!(
            "  times: spec {t_spec:.1}s seq {t_seq:.1}s reh {t_reh:.1}s joint {t_joint:.1}s"
        );
    }
}

#[allow(dead_code)]
struct Sample2;
