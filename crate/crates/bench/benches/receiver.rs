use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion, Throughput};
use matic_core::agents::scenarios::constrained_receiver;
use matic_core::agents::{bpsk_config, Receiver};
use matic_core::rng::seeded;

const SYMBOLS: usize = 10_000;

fn decode(c: &mut Criterion) {
    let mut group = c.benchmark_group("receiver");
    group.throughput(Throughput::Elements(SYMBOLS as u64));
    for (name, cfg) in [("bpsk_4db", bpsk_config(8, 4.0)), ("constrained", constrained_receiver())] {
        let rx = Receiver::new(cfg).unwrap();
        let mut rng = seeded(3);
        let msg = rx.random_message(SYMBOLS, &mut rng);
        let mut rows = rx.modulate(&msg);
        rx.channel(&mut rows, &mut rng);
        group.bench_function(format!("decode/{name}"), |b| {
            b.iter(|| rx.decode(black_box(&rows)).unwrap())
        });
    }
    let rx = Receiver::new(bpsk_config(8, 4.0)).unwrap();
    group.bench_function("simulate/bpsk_4db", |b| b.iter(|| rx.simulate(SYMBOLS, black_box(5)).unwrap()));
    group.finish();
}

criterion_group!(benches, decode);
criterion_main!(benches);
