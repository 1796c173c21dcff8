//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use dsge::config::EvolutionConfig;
use dsge::data::{load_dataset, stratified_split, Dataset, Manifest};
use dsge::engine::{run_evolution, run_evolution_with};
use dsge::genotype::{create_individual, map_genotype, GeneKey, Genotype, MappingOptions, MaxDepths};
use dsge::grammar::{connection_source_weights, Grammar};
use dsge::metrics::{auroc, fitness, Predictions};
use dsge::network::{parse_phenotype, sigmoid, OutputActivation};
use dsge::stats::u_statistic;
use dsge::variation::{common_genes, crossover, crossover_at, mutate, VariationConfig};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

const CASES: usize = 1000;

type Outcome = Result<String, String>;

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn grammar(name: &str) -> Grammar {
    let path = root().join("grammars").join(name);
    Grammar::parse(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn manifest() -> Manifest {
    Manifest::load(root().join("data/manifest.toml")).unwrap()
}

fn dataset(name: &str) -> Result<Dataset, String> {
    let m = manifest();
    m.load_dataset(name).map_err(|e| {
        format!(
            "{name} dataset unavailable ({e}); run scripts/fetch_datasets.py with network access"
        )
    })
}

fn check(cond: bool, what: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(what.into())
    }
}

const TABLE: [(&str, &str); 10] = [
    ("<start>", "[[0], [0], [1], [0,0,1], [2,5,9]]"),
    ("<float>", "[[], [0], [1], [0,0,1], [2,5,9]]"),
    ("<first>.<second>", "[[], [], [1], [0,0,1], [2,5,9]]"),
    ("1.<second>", "[[], [], [], [0,0,1], [2,5,9]]"),
    ("1.<digit><second>", "[[], [], [], [0,1], [2,5,9]]"),
    ("1.2<second>", "[[], [], [], [0,1], [5,9]]"),
    ("1.2<digit><second>", "[[], [], [1], [5,9]]"),
    ("1.25<second>", "[[], [], [], [1], [9]]"),
    ("1.25<digit>", "[[], [], [], [], [9]]"),
    ("1.259", "[[], [], [], [], []]"),
];

fn golden_mapping() -> Outcome {
    let g = grammar("real_numbers.bnf");
    let mut geno = Genotype::from_text(&g, "[[0],[0],[1],[0,0,1],[2,5,9]]").map_err(|e| e.to_string())?;
    let m = map_genotype(&mut geno, &g, &MaxDepths::new(), &MappingOptions::new(1), None).map_err(|e| e.to_string())?;
    check(m.phenotype == "1.259", format!("phenotype {}", m.phenotype))?;
    let counts: Vec<usize> = m.read_counts.counts().iter().map(|c| c.1).collect();
    check(counts == [1, 1, 1, 3, 3], format!("read counts {counts:?}"))?;

    let out = Command::new(env!("CARGO_BIN_EXE_dsge"))
        .args(["map", "--trace", "--genotype", "[[0],[0],[1],[0,0,1],[2,5,9]]", "--grammar"])
        .arg(root().join("grammars/real_numbers.bnf"))
        .output()
        .map_err(|e| e.to_string())?;
    check(out.status.success(), String::from_utf8_lossy(&out.stderr).into_owned())?;
    let stdout = String::from_utf8_lossy(&out.stdout);
    let lines: Vec<&str> = stdout.lines().collect();
    check(lines.first() == Some(&"1.259"), "cli phenotype line")?;
    let rows: Vec<(String, String)> = lines[2..]
        .iter()
        .map(|l| {
            let (form, left) = l.split_once("  ").unwrap_or((l, ""));
            (form.trim().to_string(), left.trim().to_string())
        })
        .collect();
    check(rows.len() == 10, format!("{} trace rows", rows.len()))?;
    let expected_left = [
        "[[0], [0], [1], [0,0,1], [2,5,9]]",
        "[[], [0], [1], [0,0,1], [2,5,9]]",
        "[[], [], [1], [0,0,1], [2,5,9]]",
        "[[], [], [], [0,0,1], [2,5,9]]",
        "[[], [], [], [0,1], [2,5,9]]",
        "[[], [], [], [0,1], [5,9]]",
        "[[], [], [], [1], [5,9]]",
        "[[], [], [], [1], [9]]",
        "[[], [], [], [], [9]]",
        "[[], [], [], [], []]",
    ];
    for (i, ((form, left), (want_form, _))) in rows.iter().zip(TABLE).enumerate() {
        check(form == want_form, format!("row {i} form `{form}`"))?;
        check(left == expected_left[i], format!("row {i} integers left `{left}`"))?;
    }
    Ok("1.259, read counts (1,1,1,3,3), 10 trace rows verbatim".into())
}

fn golden_operators() -> Outcome {
    let g = grammar("real_numbers.bnf");
    let parse = |t: &str| Genotype::from_text(&g, t).unwrap();
    let a = parse("[[0],[0],[2],[0,0,1],[2,5,9]]");
    let b = parse("[[0],[0],[1],[0,0,0,1],[1,0,2,4]]");
    let (x, y) = crossover_at(&a, &b, &common_genes(&a, &b), 3);
    check(x.to_text() == "[[0],[0],[2],[0,0,0,1],[1,0,2,4]]", format!("first child {}", x.to_text()))?;
    check(y.to_text() == "[[0],[0],[1],[0,0,1],[2,5,9]]", format!("second child {}", y.to_text()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut hits, trials) = (0, 5000);
    for _ in 0..trials {
        let c = crossover(&a, &b, &mut rng);
        if c.cut == Some(3) {
            check(c.children == (x.clone(), y.clone()), "random crossover at cut 3 disagrees")?;
            hits += 1;
        }
    }
    check(hits > 0, "cut 3 never drawn")?;

    let mut parent = parse("[[0],[0],[1],[0,0,1],[2,5,9]]");
    let usage = map_genotype(&mut parent, &g, &MaxDepths::new(), &MappingOptions::new(1), None)
        .unwrap()
        .read_counts;
    let mut reached = 0;
    for _ in 0..trials {
        let m = mutate(&parent, &usage, &g, &mut rng);
        let mut child = m.genotype.clone();
        let mut repair = ChaCha8Rng::seed_from_u64(rng.gen());
        let phenotype = map_genotype(
            &mut child,
            &g,
            &MaxDepths::new(),
            &MappingOptions::new(1),
            Some(&mut repair as &mut dyn RngCore),
        )
        .map_err(|e| e.to_string())?
        .phenotype;
        if phenotype == "2.259" {
            reached += 1;
            let diff: usize = parent
                .genes
                .iter()
                .zip(&m.genotype.genes)
                .map(|(p, c)| p.iter().zip(c).filter(|(u, v)| u != v).count())
                .sum();
            check(diff == 1, format!("2.259 differs in {diff} integers"))?;
            check(m.genotype == parse("[[0],[0],[2],[0,0,1],[2,5,9]]"), "unexpected 2.259 genotype")?;
        }
    }
    check(reached > 0, "2.259 never produced")?;
    Ok(format!("crossover offspring match; 2.259 reached {reached}/{trials} mutations, one integer each"))
}

struct Evo {
    fitness: f64,
    test_accuracy: f64,
}

fn desk_run(
    grammar_file: &str,
    depths: &str,
    generations: usize,
    mut inspect: impl FnMut(&dsge::network::NetworkSpec) -> Result<(), String>,
) -> Result<(Vec<Evo>, f64), String> {
    let data = dataset("flame")?;
    let g = grammar(grammar_file);
    let start = Instant::now();
    let mut runs = Vec::new();
    for seed in 0..5 {
        let config = EvolutionConfig {
            population_size: 100,
            generations,
            seed,
            max_depth: depths.parse().unwrap(),
            ..EvolutionConfig::default()
        };
        let mut violation = Ok(());
        let result = run_evolution_with(&config, &g, &data, |_, nets| {
            if violation.is_ok() {
                violation = nets.iter().try_for_each(|n| inspect(n));
            }
        })
        .map_err(|e| format!("seed {seed}: {e}"))?;
        violation?;
        runs.push(Evo {
            fitness: result.train.fitness,
            test_accuracy: result.test.accuracy,
        });
    }
    Ok((runs, start.elapsed().as_secs_f64()))
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = v.collect();
    v.iter().sum::<f64>() / v.len() as f64
}

fn one_layer_evolution() -> Outcome {
    let (runs, secs) = desk_run("one_layer.bnf", "sigexpr:6,sum:3", 100, |n| {
        check(n.hidden.len() == 1 && n.hidden[0].len() <= 7, "one-layer network exceeds 7 neurons")
    })?;
    let f = mean(runs.iter().map(|r| r.fitness));
    let acc = mean(runs.iter().map(|r| r.test_accuracy));
    let detail = format!("mean best train fitness {f:.4} (<= 1.40), mean test accuracy {acc:.4} (>= 0.85), {secs:.1}s");
    check(f <= 1.40 && acc >= 0.85 && secs < 300.0, detail.clone())?;
    Ok(detail)
}

fn multi_layer_evolution() -> Outcome {
    let mut worst = (0usize, 0usize, 0usize);
    let (runs, secs) = desk_run("multi_layer.bnf", "hidden-layers:3,nodes:5,sum:4", 150, |n| {
        n.validate().map_err(|e| e.to_string())?;
        let layers = n.hidden.len();
        let widest = n.hidden.iter().map(Vec::len).max().unwrap_or(0);
        let fan_in = n.hidden.iter().flatten().chain(&n.outputs).map(|u| u.connections.len()).max().unwrap_or(0);
        worst = (worst.0.max(layers), worst.1.max(widest), worst.2.max(fan_in));
        check(layers <= 8, format!("{layers} hidden layers"))?;
        check(widest <= 32, format!("{widest} neurons in one layer"))?;
        check(fan_in <= 16, format!("{fan_in} connections into one neuron"))
    })?;
    let f = mean(runs.iter().map(|r| r.fitness));
    let detail = format!(
        "mean best train fitness {f:.4} (<= 1.45); largest seen: {} layers, {} neurons/layer, {} connections; {secs:.1}s",
        worst.0, worst.1, worst.2
    );
    check(f <= 1.45 && secs < 900.0, detail.clone())?;
    Ok(detail)
}

fn multi_depths() -> MaxDepths {
    "hidden-layers:3,nodes:5,sum:4".parse().unwrap()
}

fn random_individuals(g: &Grammar, depths: &MaxDepths, opts: &MappingOptions, seed: u64) -> Vec<Genotype> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..CASES).map(|_| create_individual(g, depths, opts, &mut rng).unwrap()).collect()
}

fn prop_depth_soundness() -> Result<(), String> {
    for (file, depths, features) in [
        ("one_layer.bnf", MaxDepths::new().with("sigexpr", 6).with("sum", 3), 30),
        ("multi_layer.bnf", multi_depths(), 2),
        ("real_numbers.bnf", MaxDepths::new().with("second", 2), 1),
    ] {
        let g = grammar(file);
        let opts = MappingOptions::new(features);
        for mut geno in random_individuals(&g, &depths, &opts, 11) {
            let m = map_genotype(&mut geno, &g, &depths, &opts, None).map_err(|e| e.to_string())?;
            for (name, cap) in depths.iter() {
                let nt = g.id(name).unwrap();
                check(m.deepest[nt.0] <= cap, format!("{file}: <{name}> reached depth {}", m.deepest[nt.0]))?;
            }
        }
    }
    Ok(())
}

/// Truncate genes and corrupt connection choices at random.
fn damage(geno: &mut Genotype, rng: &mut impl Rng) {
    for gene in geno.genes.iter_mut() {
        if !gene.is_empty() && rng.gen_bool(0.3) {
            let keep = rng.gen_range(0..gene.len());
            gene.truncate(keep);
        }
    }
    for gene in geno.dynamic.values_mut() {
        for v in gene.iter_mut() {
            if rng.gen_bool(0.2) {
                *v += rng.gen_range(1..40);
            }
        }
    }
}

fn prop_repair_idempotence() -> Result<(), String> {
    let g = grammar("multi_layer.bnf");
    let depths = multi_depths();
    let opts = MappingOptions::new(2);
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for mut geno in random_individuals(&g, &depths, &opts, 12) {
        damage(&mut geno, &mut rng);
        let first = map_genotype(&mut geno, &g, &depths, &opts, Some(&mut rng as &mut dyn RngCore))
            .map_err(|e| e.to_string())?;
        let before = geno.clone();
        let second = map_genotype(&mut geno, &g, &depths, &opts, None).map_err(|e| e.to_string())?;
        check(second.phenotype == first.phenotype, "second mapping changed the phenotype")?;
        check(second.draws == 0 && geno == before, "second mapping repaired again")?;
    }
    Ok(())
}

fn prop_mapping_determinism() -> Result<(), String> {
    let g = grammar("multi_layer.bnf");
    let depths = multi_depths();
    let opts = MappingOptions::new(2);
    let a = random_individuals(&g, &depths, &opts, 13);
    let b = random_individuals(&g, &depths, &opts, 13);
    check(a == b, "creation differs for one seed")?;
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for geno in a {
        let mut x = geno.clone();
        damage(&mut x, &mut rng);
        let mut y = x.clone();
        let seed = rng.gen::<u64>();
        let mx = map_genotype(&mut x, &g, &depths, &opts, Some(&mut ChaCha8Rng::seed_from_u64(seed) as &mut dyn RngCore));
        let my = map_genotype(&mut y, &g, &depths, &opts, Some(&mut ChaCha8Rng::seed_from_u64(seed) as &mut dyn RngCore));
        check(mx.unwrap() == my.unwrap() && x == y, "mapping differs for one seed")?;
    }
    Ok(())
}

fn prop_mutation() -> Result<(), String> {
    let data = [
        ("multi_layer.bnf", multi_depths(), 2),
        ("real_numbers.bnf", MaxDepths::new().with("second", 2), 1),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for (file, depths, features) in data {
        let g = grammar(file);
        let opts = MappingOptions::new(features);
        for mut geno in random_individuals(&g, &depths, &opts, 15) {
            let usage = map_genotype(&mut geno, &g, &depths, &opts, None).unwrap().read_counts;
            let m = mutate(&geno, &usage, &g, &mut rng);
            let Some((key, pos)) = m.site else {
                check(m.genotype == geno, "flagged mutation changed the genotype")?;
                continue;
            };
            let u = &usage.genes[&key];
            check(u.choices > 1, "mutated a single-alternative gene")?;
            check(pos < u.read, "mutated an unused integer")?;
            let mut changed = 0;
            for k in geno.keys() {
                let (p, c) = (geno.gene(k).unwrap(), m.genotype.gene(k).unwrap());
                check(p.len() == c.len(), "gene length changed")?;
                changed += p.iter().zip(c).filter(|(a, b)| a != b).count();
            }
            check(changed == 1, format!("{changed} integers changed"))?;
            let new = m.genotype.gene(key).unwrap()[pos];
            check(new < u.choices, "new value out of range")?;
            if let GeneKey::Static(nt) = key {
                check(!(u.capped[pos] && g.is_recursive(nt, new)), "recursive choice at a depth limit")?;
            }
        }
    }
    Ok(())
}

fn prop_crossover() -> Result<(), String> {
    let g = grammar("multi_layer.bnf");
    let depths = multi_depths();
    let opts = MappingOptions::new(2);
    let mut pop = random_individuals(&g, &depths, &opts, 16);
    for geno in pop.iter_mut() {
        map_genotype(geno, &g, &depths, &opts, None).unwrap();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    for i in 0..CASES {
        let (a, b) = (&pop[i], &pop[(i * 7 + 3) % CASES]);
        let c = crossover(a, b, &mut rng);
        let (x, y) = &c.children;
        for k in a.keys().into_iter().chain(b.keys()) {
            let parents = (a.gene(k), b.gene(k));
            let children = (x.gene(k), y.gene(k));
            check(children == parents || children == (parents.1, parents.0), "gene not conserved")?;
        }
        check(x.keys() == a.keys() && y.keys() == b.keys(), "gene sets changed")?;
    }
    Ok(())
}

fn toy_dataset(rng: &mut impl Rng) -> Dataset {
    let n = 40;
    let mut features = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let class = (i % 2) as u8;
        let c = if class == 1 { 1.0 } else { -1.0 };
        features.push(vec![c + rng.gen_range(-1.5..1.5), rng.gen_range(-1.0..1.0)]);
        labels.push(class);
    }
    Dataset::new("toy", features, labels).unwrap()
}

fn prop_elitism() -> Result<(), String> {
    let g = grammar("one_layer.bnf");
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for case in 0..CASES {
        let data = toy_dataset(&mut rng);
        let config = EvolutionConfig {
            population_size: 8,
            generations: 50,
            seed: case as u64,
            variation: VariationConfig {
                crossover_rate: rng.gen_range(0.0..=1.0),
                mutation_rate: rng.gen_range(0.0..=1.0),
                tournament_size: rng.gen_range(1..5),
                elite_fraction: rng.gen_range(0.01..0.5),
            },
            ..EvolutionConfig::default()
        };
        let r = run_evolution(&config, &g, &data).map_err(|e| e.to_string())?;
        check(r.history.len() == 50, "history length")?;
        for w in r.history.windows(2) {
            check(w[1].best_fitness <= w[0].best_fitness, format!("case {case}: best fitness rose"))?;
        }
    }
    Ok(())
}

fn prop_source_weights() -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(18);
    for _ in 0..CASES {
        let layers = rng.gen_range(1..9);
        let sizes: Vec<usize> = (0..layers).map(|_| rng.gen_range(1..65)).collect();
        let n = rng.gen_range(1..61);
        for layer in 2..=layers + 1 {
            let w = connection_source_weights(layer, &sizes, n).map_err(|e| e.to_string())?;
            let total: f64 = w.iter().sum();
            check((total - 1.0).abs() < 1e-12, format!("weights sum to {total}"))?;
            check(w.iter().all(|&p| p > 0.0), "non-positive weight")?;
        }
    }
    Ok(())
}

fn prop_activation_ranges() -> Result<(), String> {
    let g = grammar("multi_layer.bnf");
    let depths = multi_depths();
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    for outputs in [1, 2] {
        let opts = MappingOptions {
            n_outputs: outputs,
            ..MappingOptions::new(3)
        };
        for mut geno in random_individuals(&g, &depths, &opts, 19) {
            let m = map_genotype(&mut geno, &g, &depths, &opts, None).unwrap();
            let net = parse_phenotype(&m.phenotype, 3).map_err(|e| e.to_string())?;
            let x: Vec<f64> = (0..3).map(|_| rng.gen_range(-10.0..10.0)).collect();
            let y = net.forward(&x).map_err(|e| e.to_string())?;
            if net.output_activation == OutputActivation::Softmax {
                check(y.iter().all(|&v| v >= 0.0), format!("negative softmax output: {y:?}"))?;
                check((y.iter().sum::<f64>() - 1.0).abs() <= 1e-12, "softmax does not sum to 1")?;
            } else {
                check(y.iter().all(|&v| v > 0.0 && v < 1.0), format!("sigmoid outside (0,1): {y:?}"))?;
            }
            let z = rng.gen_range(-800.0..800.0);
            check(sigmoid(z) > 0.0 && sigmoid(z) < 1.0, format!("sigma({z}) = {}", sigmoid(z)))?;
        }
    }
    Ok(())
}

fn prop_auroc() -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    for _ in 0..CASES {
        let n = rng.gen_range(2..=200);
        let mut targets: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2)).collect();
        targets[0] = 0;
        targets[1] = 1;
        let conf: Vec<f64> = (0..n).map(|_| rng.gen_range(0..25) as f64 / 24.0).collect();
        let p = Predictions::new(conf.clone(), targets.clone()).unwrap();
        let (mut wins, mut pairs) = (0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                if targets[i] == 1 && targets[j] == 0 {
                    pairs += 1.0;
                    wins += if conf[i] > conf[j] { 1.0 } else if conf[i] == conf[j] { 0.5 } else { 0.0 };
                }
            }
        }
        let a = auroc(&p).unwrap();
        check((a - wins / pairs).abs() <= 1e-12, format!("auroc {a} vs {}", wins / pairs))?;
    }
    Ok(())
}

fn prop_mann_whitney() -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..CASES {
        let a: Vec<f64> = (0..rng.gen_range(1..=50)).map(|_| rng.gen_range(0..15) as f64).collect();
        let b: Vec<f64> = (0..rng.gen_range(1..=50)).map(|_| rng.gen_range(0..15) as f64).collect();
        let mut pairs = 0.0;
        for x in &a {
            for y in &b {
                pairs += if x > y { 1.0 } else if x == y { 0.5 } else { 0.0 };
            }
        }
        check(u_statistic(&a, &b) == pairs, "U differs from pair count")?;
    }
    Ok(())
}

fn properties() -> Outcome {
    let props: [(&str, fn() -> Result<(), String>); 10] = [
        ("depth soundness", prop_depth_soundness),
        ("repair idempotence", prop_repair_idempotence),
        ("mapping determinism", prop_mapping_determinism),
        ("mutation single change and eligibility", prop_mutation),
        ("crossover gene conservation", prop_crossover),
        ("elitism over 50 generations", prop_elitism),
        ("connection weights sum to 1", prop_source_weights),
        ("sigmoid and softmax ranges", prop_activation_ranges),
        ("AUROC vs pairwise enumeration", prop_auroc),
        ("Mann-Whitney U vs pair count", prop_mann_whitney),
    ];
    let mut failed = Vec::new();
    for (name, prop) in props {
        match prop() {
            Ok(()) => println!("      ok    {name} ({CASES} cases)"),
            Err(e) => {
                println!("      FAIL  {name}: {e}");
                failed.push(name);
            }
        }
    }
    if failed.is_empty() {
        Ok(format!("{} properties, {CASES} cases each", props.len()))
    } else {
        Err(format!("failing: {}", failed.join(", ")))
    }
}

fn fitness_units() -> Outcome {
    let exact = fitness(&Predictions::new(vec![0.0, 1.0, 0.0], vec![0, 1, 0]).unwrap(), 2).unwrap();
    check(exact == 1.0, format!("perfect fitness {exact}"))?;
    let e2 = fitness(&Predictions::new(vec![1.0, 0.0, 1.0], vec![0, 1, 0]).unwrap(), 2).unwrap();
    check((e2 - 7.38906).abs() < 1e-5, format!("unit residual fitness {e2}"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for _ in 0..10_000 {
        let n = rng.gen_range(2..100);
        let mut t: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2)).collect();
        t[0] = 0;
        t[1] = 1;
        let o: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
        let f = fitness(&Predictions::new(o, t).unwrap(), 2).unwrap();
        check(f >= 1.0, format!("fitness {f} below 1"))?;
    }
    Ok(format!("perfect = 1, unit residuals = {e2:.6}, 10000 random vectors >= 1"))
}

fn dataset_checks() -> Outcome {
    let m = manifest();
    let wdbc = dataset("wdbc")?;
    check(wdbc.len() == 569 && wdbc.n_features() == 30, format!("wdbc {}x{}", wdbc.len(), wdbc.n_features()))?;
    let [neg, pos] = wdbc.class_counts();
    let (s0, s1) = (100.0 * neg as f64 / 569.0, 100.0 * pos as f64 / 569.0);
    check((s0 - 62.74).abs() <= 0.01 && (s1 - 37.26).abs() <= 0.01, format!("wdbc shares {s0:.2}/{s1:.2}"))?;
    let wdbc_note = format!("WDBC 569x30, {s0:.2}%/{s1:.2}%");

    let entry = m.entry("flame").unwrap();
    let flame = load_dataset(m.path_of("flame").unwrap(), &entry.label_column, &entry.positive_label)
        .map_err(|e| format!("{wdbc_note}; flame dataset unavailable ({e}); run scripts/fetch_datasets.py"))?;
    check(flame.len() == 240 && flame.n_features() == 2, format!("flame {}x{}", flame.len(), flame.n_features()))?;
    let split = stratified_split(&flame, 0.7, 0).unwrap();
    check(
        split.train.len() == 168 && split.test.len() == 72,
        format!("flame split {}/{}", split.train.len(), split.test.len()),
    )?;
    Ok(format!("{wdbc_note}; flame split 168/72"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 7] = [
        ("golden mapping", golden_mapping),
        ("golden operators", golden_operators),
        ("one-layer evolution on flame", one_layer_evolution),
        ("multi-layer evolution on flame", multi_layer_evolution),
        ("property suites", properties),
        ("fitness unit checks", fitness_units),
        ("dataset checks", dataset_checks),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  {}. {name}: {detail} [{secs:.1}s]", i + 1),
            Err(detail) => {
                failures += 1;
                println!("FAIL  {}. {name}: {detail} [{secs:.1}s]", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
