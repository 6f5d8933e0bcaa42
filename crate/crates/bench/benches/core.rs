use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};

use hmptcp_bench::{filled_replay, random_transition, short_del, short_exp1};
use hmptcp_core::agent::{AcrConfig, AcrNetworks};
use hmptcp_core::experiment::run_scenario;
use hmptcp_core::sim::{stream_rng, Packet, PathConfig, PathState};
use hmptcp_core::transport::{lia_alpha, Controller};

fn transport(c: &mut Criterion) {
    let windows = [10.0, 20.0, 35.0, 5.0];
    let rtts = [0.05, 0.08, 0.12, 0.3];
    c.bench_function("lia_alpha_4_paths", |b| b.iter(|| lia_alpha(black_box(&windows), black_box(&rtts))));
    c.bench_function("path_enqueue", |b| {
        b.iter_batched(
            || PathState::new(PathConfig::constant(50e6, 0.025, 0.01, 100), stream_rng(1, 1)),
            |mut path| {
                for seq in 0..100 {
                    let p = Packet::data(0, 0, seq, 1500, seq as f64 * 1e-4);
                    black_box(path.enqueue(&p, p.sent_at()));
                }
            },
            BatchSize::SmallInput,
        )
    });
}

fn agent(c: &mut Criterion) {
    let nets = AcrNetworks::new(AcrConfig::default(), 1);
    let mut rng = stream_rng(2, 0);
    let t = random_transition(&mut rng, 2);
    c.bench_function("final_state_and_action_2_subflows", |b| {
        b.iter(|| {
            let f = nets.final_state(black_box(&t.state)).unwrap();
            nets.greedy_action(&f, 2).unwrap()
        })
    });
    let replay = filled_replay(3, 2024);
    let mut g = c.benchmark_group("training");
    g.sample_size(20);
    g.bench_function("train_step_batch_32", |b| {
        let mut nets = AcrNetworks::new(AcrConfig::default(), 1);
        let mut rng = stream_rng(4, 0);
        b.iter(|| {
            nets.train_step(&replay, &mut rng).unwrap();
            nets.soft_update();
        })
    });
    g.finish();
}

fn simulation(c: &mut Criterion) {
    let mut g = c.benchmark_group("simulation");
    g.sample_size(10);
    let lia = short_exp1(Controller::Lia, 10.0);
    g.bench_function("exp1_lia_10s", |b| b.iter(|| run_scenario(&lia).unwrap()));
    let del = short_del(Controller::Lia, 10.0);
    g.bench_function("del_six_workers_lia_10s", |b| b.iter(|| run_scenario(&del).unwrap()));
    g.finish();
}

criterion_group!(benches, transport, agent, simulation);
criterion_main!(benches);
