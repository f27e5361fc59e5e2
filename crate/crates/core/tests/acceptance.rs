//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sentiprice_core::corpus::{parse_timestamp, DocKind, Document, Half, HalfMonthBucket};
use sentiprice_core::lexicon::{LexiconEntry, Polarity, PolarityLexicon, WordClass};
use sentiprice_core::numerics::{
    chi_square_2x2, least_squares_fit, t_two_sided_p, ContingencyTable2x2, LeastSquaresProblem, Matrix,
};
use sentiprice_core::partition::{summarize, Dataset, PartitionLabel, PartitionSummary};
use sentiprice_core::pipeline::{
    analyze_market, analyze_text, cmd_run, cmd_synth, MarketInputs, PipelineConfig, TextInputs, MANIFEST,
};
use sentiprice_core::sentiment::{score_text, tokenizer_for, PolarityCounts, SentimentScorer};
use sentiprice_core::study::{
    describe_listings, lag_align, BodyType, Regressor, SeriesPoint, StudyGrid, SCORE_BOUND, SUMMARY_BAND,
};
use sentiprice_core::synth::{self, SyntheticSpec};

type Outcome = Result<String, String>;
type Criterion = (&'static str, &'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: f64) -> Result<(), String> {
    ensure(elapsed.as_secs_f64() < limit, || {
        format!("took {:.2} s, limit {limit} s", elapsed.as_secs_f64())
    })
}

// ---------------------------------------------------------------- AC1

fn ac1_sentiment() -> Outcome {
    let start = Instant::now();
    let entry = |s: &str, p| LexiconEntry {
        surface: s.into(),
        word_class: WordClass::Adjective,
        polarity: p,
    };
    let lex = PolarityLexicon::new(
        [
            entry("happy", Polarity::Positive),
            entry("glad", Polarity::Positive),
            entry("sad", Polarity::Negative),
            entry("okay", Polarity::Neutral),
        ],
        ["not".to_string(), "never".to_string()],
        [],
    )
    .map_err(|e| e.to_string())?;
    let tok = tokenizer_for(&lex, []);
    let scorer = SentimentScorer::new(&lex, &tok);

    let formula = [
        ((3, 1, 0), 0.5),
        ((0, 0, 0), 0.0),
        ((1, 1, 2), 0.0),
        ((0, 4, 0), -1.0),
        ((1, 2, 1), -0.25),
        ((2, 0, 3), 0.4),
    ];
    for ((p, n, z), want) in formula {
        let got = score_text(PolarityCounts::new(p, n, z)).0;
        ensure(got == want, || format!("S({p},{n},{z}) = {got}, want {want}"))?;
    }

    let texts = [
        ("happy", 1.0),
        ("not happy", -1.0),
        ("not not happy", 1.0),
        ("never not sad", -1.0),
        ("not sad okay", 0.5),
        ("happy。not sad", 1.0),
        ("not happy、glad", 0.0),
        ("sad sad happy okay", -0.25),
        ("nothing polar here", 0.0),
        ("", 0.0),
    ];
    for (text, want) in texts {
        let got = scorer.score_text(text).0;
        ensure(got == want, || format!("score({text:?}) = {got}, want {want}"))?;
    }

    let doc = |text: &str, att: Option<&str>| Document {
        doc_id: "d".into(),
        page_id: "p".into(),
        kind: DocKind::Post,
        timestamp: parse_timestamp("2011-05-01T12:00:00").expect("valid"),
        text: text.into(),
        attachment_text: att.map(String::from),
    };
    let docs = [
        (doc("happy", Some("sad")), 0.0, true),
        (doc("happy", Some("happy")), 1.0, false),
        (doc("happy", Some("not sad okay")), 1.5, true),
        (doc("happy glad", Some("happy glad")), 1.0, false),
        (doc("happy", Some("glad")), 2.0, true),
        (doc("sad", Some("not happy")), -2.0, true),
        (doc("okay", None), 0.0, false),
    ];
    for (d, want, added) in &docs {
        let s = scorer.score_document(d);
        ensure(s.score.0 == *want && s.attachment_added == *added, || {
            format!("document {:?}/{:?} scored {:?}", d.text, d.attachment_text, s)
        })?;
    }
    within(start.elapsed(), 1.0)?;
    Ok(format!(
        "{} formula, {} negation and {} attachment cases exact",
        formula.len(),
        texts.len(),
        docs.len()
    ))
}

// ---------------------------------------------------------------- AC2

fn chi_square_oracle(t: ContingencyTable2x2) -> f64 {
    let obs = [[t.a as f64, t.b as f64], [t.c as f64, t.d as f64]];
    let n: f64 = obs.iter().flatten().sum();
    let rows = [obs[0][0] + obs[0][1], obs[1][0] + obs[1][1]];
    let cols = [obs[0][0] + obs[1][0], obs[0][1] + obs[1][1]];
    let mut x = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let e = rows[i] * cols[j] / n;
            x += (obs[i][j] - e).powi(2) / e;
        }
    }
    x
}

/// Solves X'X b = X'y by Gauss-Jordan with partial pivoting and returns
/// the coefficients with their standard errors.
fn normal_equations_oracle(x: &[Vec<f64>], y: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let (n, k) = (x.len(), x[0].len());
    let mut aug = vec![vec![0.0; 2 * k + 1]; k];
    for i in 0..k {
        for j in 0..k {
            aug[i][j] = (0..n).map(|r| x[r][i] * x[r][j]).sum();
        }
        aug[i][k + i] = 1.0;
        aug[i][2 * k] = (0..n).map(|r| x[r][i] * y[r]).sum();
    }
    for c in 0..k {
        let p = (c..k).max_by(|&a, &b| aug[a][c].abs().total_cmp(&aug[b][c].abs())).unwrap();
        aug.swap(c, p);
        let d = aug[c][c];
        for v in aug[c].iter_mut() {
            *v /= d;
        }
        for r in 0..k {
            if r != c {
                let f = aug[r][c];
                let pivot = aug[c].clone();
                for (v, pv) in aug[r].iter_mut().zip(pivot) {
                    *v -= f * pv;
                }
            }
        }
    }
    let beta: Vec<f64> = (0..k).map(|i| aug[i][2 * k]).collect();
    let rss: f64 = (0..n)
        .map(|r| {
            let fit: f64 = (0..k).map(|j| x[r][j] * beta[j]).sum();
            (y[r] - fit).powi(2)
        })
        .sum();
    let sigma2 = rss / (n - k) as f64;
    let se = (0..k).map(|i| (sigma2 * aug[i][k + i]).sqrt()).collect();
    (beta, se)
}

fn ac2_numerics() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst_chi: f64 = 0.0;
    let mut tables = 0;
    while tables < 1000 {
        let scale = 10u64.pow(rng.random_range(1..7));
        let t = ContingencyTable2x2::new(
            rng.random_range(0..scale),
            rng.random_range(1..scale),
            rng.random_range(0..scale),
            rng.random_range(1..scale),
        );
        let Ok(got) = chi_square_2x2(t) else { continue };
        let want = chi_square_oracle(t);
        let err = (got.statistic - want).abs() / want.abs().max(1.0);
        worst_chi = worst_chi.max(err);
        ensure(err <= 1e-9, || format!("chi-square {t:?}: {} vs {want}", got.statistic))?;
        tables += 1;
    }

    let mut worst_ols: f64 = 0.0;
    for case in 0..200 {
        let k = rng.random_range(1..=13usize);
        let n = rng.random_range(k + 5..=200usize);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                let mut r = vec![1.0];
                r.extend((1..k).map(|j| rng.random_range(-1.0..1.0) * (1.0 + j as f64)));
                r
            })
            .collect();
        let truth: Vec<f64> = (0..k).map(|_| rng.random_range(-3.0..3.0)).collect();
        let y: Vec<f64> = rows
            .iter()
            .map(|r| r.iter().zip(&truth).map(|(a, b)| a * b).sum::<f64>() + rng.random_range(-0.5..0.5))
            .collect();
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        let problem = LeastSquaresProblem::new(Matrix::from_row_slice(n, k, &flat), y.clone()).map_err(|e| e.to_string())?;
        let fit = least_squares_fit(&problem).map_err(|e| format!("case {case}: {e}"))?;
        let (beta, se) = normal_equations_oracle(&rows, &y);
        let scale = beta.iter().fold(1.0f64, |m, b| m.max(b.abs()));
        for j in 0..k {
            let eb = (fit.beta[j] - beta[j]).abs() / scale;
            let es = (fit.std_errors[j] - se[j]).abs() / se[j];
            worst_ols = worst_ols.max(eb).max(es);
            ensure(eb <= 1e-8 && es <= 1e-8, || {
                format!("case {case} (n={n}, k={k}) column {j}: beta {} vs {}, se {} vs {}", fit.beta[j], beta[j], fit.std_errors[j], se[j])
            })?;
        }
    }

    let p = t_two_sided_p(1.96, 10_000);
    ensure((p - 0.05).abs() <= 0.001, || format!("t_two_sided_p(1.96, 10000) = {p}"))?;
    within(start.elapsed(), 10.0)?;
    Ok(format!(
        "1000 tables (max rel err {worst_chi:.1e}), 200 OLS problems (max rel err {worst_ols:.1e}), p(1.96, 10000) = {p:.5}"
    ))
}

// ---------------------------------------------------------------- AC3

fn ac3_partition() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let labels: Vec<PartitionLabel> = (0..10_000)
        .map(|_| PartitionLabel::new(rng.random_bool(0.3), rng.random_bool(0.6)))
        .collect();
    let members = |d: Dataset| -> BTreeSet<usize> { (0..labels.len()).filter(|&i| labels[i].contains(d)).collect() };
    let (d1, d2, d3, d4) = (members(Dataset::D1), members(Dataset::D2), members(Dataset::D3), members(Dataset::D4));
    ensure(d3 == d1.intersection(&d2).copied().collect(), || "D3 != D1 ∩ D2".into())?;
    ensure(d4 == d2.difference(&d3).copied().collect(), || "D4 != D2 \\ D3".into())?;
    ensure(d2.len() == d3.len() + d4.len(), || "|D2| != |D3| + |D4|".into())?;
    let s = summarize(&labels);
    ensure((s.d1, s.d2, s.d3, s.d4) == (d1.len(), d2.len(), d3.len(), d4.len()), || format!("summary {s:?}"))?;
    s.check().map_err(|e| e.to_string())?;

    // Reference dataset sizes: |D1|, |D2|, |D3| determine |D4|.
    let reference = PartitionSummary::from_overlap(67_330, 264_441, 56_017).map_err(|e| e.to_string())?;
    ensure(reference.d4 == 208_424, || format!("reference D4 = {}", reference.d4))?;
    ensure(PartitionSummary::from_overlap(10, 20, 11).is_err(), || "D3 > D1 accepted".into())?;

    let data = synth::generate(&SyntheticSpec {
        n_docs: 4_000,
        n_baseline_docs: 1_000,
        n_listings: 200,
        ..SyntheticSpec::default()
    })?;
    let text = TextInputs::from_synthetic(&data).map_err(|e| e.to_string())?;
    let cfg = PipelineConfig::for_synthetic_dir(Path::new("unused"));
    let analysis = analyze_text(&text, &cfg).map_err(|e| e.to_string())?;
    ensure(analysis.labeling.summary == data.truth.summary, || {
        format!("pipeline {:?} vs planted {:?}", analysis.labeling.summary, data.truth.summary)
    })?;
    Ok(format!(
        "10000 random labels: D1 {} D2 {} D3 {} D4 {}; 264441 - 56017 = 208424; synthetic partition matches plant",
        s.d1, s.d2, s.d3, s.d4
    ))
}

// ---------------------------------------------------------------- AC4

fn recover(noise: f64, dir: &Path) -> Result<(f64, String), String> {
    let spec = SyntheticSpec {
        noise_sigma: noise,
        n_listings: 5_000,
        ..SyntheticSpec::default()
    };
    cmd_synth(&spec, dir).map_err(|e| e.to_string())?;
    let cfg = PipelineConfig::load(&dir.join("config.toml")).map_err(|e| e.to_string())?;
    let market = MarketInputs::load(&cfg).map_err(|e| e.to_string())?;
    let text = TextInputs::load(&cfg).map_err(|e| e.to_string())?;
    let analysis = analyze_text(&text, &cfg).map_err(|e| e.to_string())?;
    let m = analyze_market(&market, &analysis.series).map_err(|e| e.to_string())?;
    let fit = m
        .grid
        .cell(Dataset::D1, BodyType::LR)
        .ok_or("no D1/LR cell")?
        .outcome
        .clone()?;
    let s = fit.coefficient(Regressor::S).ok_or("S omitted")?;
    Ok((s.coef, s.stars().to_string()))
}

fn ac4_recovery() -> Outcome {
    let start = Instant::now();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (noisy, stars) = recover(0.1, &dir.path().join("noisy"))?;
    ensure((noisy - 0.9).abs() <= 0.05, || format!("noise 0.1: beta_S = {noisy}"))?;
    ensure(stars == "**", || format!("noise 0.1: beta_S flagged {stars:?}"))?;
    let (exact, _) = recover(0.0, &dir.path().join("exact"))?;
    ensure((exact - 0.9).abs() <= 1e-6, || format!("noise 0: beta_S = {exact}"))?;
    within(start.elapsed(), 30.0)?;
    Ok(format!(
        "D1/LR beta_S = {noisy:.4}{stars} at noise 0.1, |{exact:.9} - 0.9| <= 1e-6 at noise 0 ({:.1} s)",
        start.elapsed().as_secs_f64()
    ))
}

// ---------------------------------------------------------------- AC5

fn sign_hits(grid: &StudyGrid) -> usize {
    grid.cells
        .iter()
        .filter(|c| {
            let want_positive = matches!(c.dataset, Dataset::D1 | Dataset::D3);
            c.outcome
                .as_ref()
                .ok()
                .and_then(|f| f.coefficient(Regressor::S))
                .is_some_and(|s| s.significant() && (s.coef > 0.0) == want_positive)
        })
        .count()
}

fn ac5_sign_pattern() -> Outcome {
    let start = Instant::now();
    let cfg = PipelineConfig::for_synthetic_dir(Path::new("unused"));
    let mut per_seed = Vec::new();
    for seed in 0..20 {
        let data = synth::generate(&SyntheticSpec::sign_pattern(seed))?;
        let text = TextInputs::from_synthetic(&data).map_err(|e| e.to_string())?;
        let analysis = analyze_text(&text, &cfg).map_err(|e| e.to_string())?;
        let m = analyze_market(&MarketInputs::from_synthetic(&data), &analysis.series).map_err(|e| e.to_string())?;
        ensure(m.grid.cells.len() == 16, || format!("seed {seed}: {} cells", m.grid.cells.len()))?;
        per_seed.push(sign_hits(&m.grid));
    }
    let worst = *per_seed.iter().min().expect("20 seeds");
    ensure(worst >= 15, || format!("cells with the expected significant sign per seed: {per_seed:?}"))?;
    let total: usize = per_seed.iter().sum();
    Ok(format!(
        "{total}/320 cells match, worst seed {worst}/16 ({:.1} s)",
        start.elapsed().as_secs_f64()
    ))
}

// ---------------------------------------------------------------- AC6

fn ac6_calendar() -> Outcome {
    let first = NaiveDate::from_ymd_opt(2010, 1, 1).unwrap();
    let last = NaiveDate::from_ymd_opt(2012, 12, 31).unwrap();
    let mut spans: BTreeMap<HalfMonthBucket, (NaiveDate, NaiveDate)> = BTreeMap::new();
    let mut prev: Option<HalfMonthBucket> = None;
    for day in first.iter_days().take_while(|d| *d <= last) {
        let b = HalfMonthBucket::of_date(day);
        if let Some(p) = prev {
            ensure(b == p || b == p.next(), || format!("{day}: {p} -> {b} skips or repeats a bucket"))?;
            ensure(b >= p, || format!("{day}: bucket order regresses"))?;
        }
        spans.entry(b).and_modify(|s| s.1 = day).or_insert((day, day));
        prev = Some(b);
    }
    for (b, (lo, hi)) in &spans {
        ensure(b.day_span() == (*lo, *hi), || format!("{b}: span {:?} vs observed {lo}..{hi}", b.day_span()))?;
    }
    ensure(spans.len() == 72, || format!("{} buckets", spans.len()))?;

    let d = |m, day| HalfMonthBucket::of_date(NaiveDate::from_ymd_opt(2011, m, day).unwrap());
    ensure(d(3, 10).half() == Half::Mar11Pre && d(3, 11).half() == Half::Mar11Post, || "March 2011 split".into())?;
    ensure(d(3, 15).half() == Half::Mar11Post && d(3, 16).half() == Half::Mar11Post, || "POST covers 11-31".into())?;
    ensure(
        HalfMonthBucket::of_date(NaiveDate::from_ymd_opt(2012, 3, 10).unwrap()).half() == Half::H1,
        || "split leaks into 2012".into(),
    )?;

    let b = |s: &str| s.parse::<HalfMonthBucket>().unwrap();
    ensure(lag_align(b("2011-04-H2")) == Ok(b("2011-05-H2")), || "lag_align(2011-04-H2)".into())?;
    ensure(lag_align(b("2011-12-H1")) == Ok(b("2012-01-H1")), || "lag across year end".into())?;
    ensure(lag_align(b("2011-03-PRE")).is_err() && lag_align(b("2011-02-H1")).is_err(), || "split lag".into())?;
    Ok(format!("{} buckets tile 1096 days; March 2011 splits at day 11; 2011-04-H2 -> 2011-05-H2", spans.len()))
}

// ---------------------------------------------------------------- AC7

fn ac7_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let spec = SyntheticSpec {
        seed: 7,
        ..SyntheticSpec::default()
    };
    cmd_synth(&spec, dir.path()).map_err(|e| e.to_string())?;
    let base = PipelineConfig::load(&dir.path().join("config.toml")).map_err(|e| e.to_string())?;
    let mut outputs = Vec::new();
    for threads in [1, 8] {
        let cfg = PipelineConfig {
            threads,
            out_dir: dir.path().join(format!("out{threads}")),
            ..base.clone()
        };
        cmd_run(&cfg).map_err(|e| e.to_string())?;
        outputs.push(cfg.out_dir);
    }
    let files = ["grid.json", "partition.json", "descriptive.json", MANIFEST];
    for f in files {
        let a = std::fs::read(outputs[0].join(f)).map_err(|e| format!("{f}: {e}"))?;
        let b = std::fs::read(outputs[1].join(f)).map_err(|e| format!("{f}: {e}"))?;
        ensure(a == b, || format!("{f} differs between 1 and 8 threads"))?;
    }
    Ok("grid.json, partition.json, descriptive.json and MANIFEST identical at 1 and 8 threads".into())
}

// ---------------------------------------------------------------- AC8

fn ac8_descriptive() -> Outcome {
    let data = synth::generate(&SyntheticSpec {
        n_docs: 6_000,
        n_baseline_docs: 1_500,
        n_listings: 2_000,
        ..SyntheticSpec::default()
    })?;
    let report = describe_listings(&data.listings, &data.series, &data.deflators).map_err(|e| e.to_string())?;
    ensure(report.body_types.len() == 4, || format!("{} body types", report.body_types.len()))?;
    let mut expected: Vec<String> = ["real_price", "ln_real_price"].map(String::from).to_vec();
    expected.extend(Regressor::ALL[1..11].iter().map(|r| r.name().to_string()));
    expected.extend(Dataset::ALL.iter().map(|d| format!("S_{d}")));
    for b in &report.body_types {
        let names: Vec<String> = b.variables.iter().map(|v| v.variable.clone()).collect();
        ensure(names == expected, || format!("{}: variables {names:?}", b.body_type))?;
        for v in &b.variables {
            ensure(v.n > 1 && v.min <= v.mean && v.mean <= v.max && v.std >= 0.0, || {
                format!("{} {}: {v:?}", b.body_type, v.variable)
            })?;
        }
    }
    let text = report.render_text();
    for needle in ["mean", "std", "min", "max", "0.17-0.23", "advisory only"] {
        ensure(text.contains(needle), || format!("report text lacks {needle:?}"))?;
    }
    ensure(report.range_violations().next().is_none(), || "clean series flagged".into())?;

    // A corrupted point is reported, not rejected.
    let mut series = data.series.clone();
    let d2 = series.get_mut(&Dataset::D2).ok_or("no D2 series")?;
    let (&bucket, _) = d2.points.iter().next().ok_or("empty D2 series")?;
    d2.points.insert(bucket, SeriesPoint { mean: 2.5, n_docs: 1 });
    let flagged =
        describe_listings(&data.listings, &series, &data.deflators).map_err(|e| format!("range check aborted: {e}"))?;
    let violations: Vec<_> = flagged.range_violations().collect();
    ensure(violations.len() == 1 && violations[0].0 == Dataset::D2, || format!("violations {violations:?}"))?;
    ensure(flagged.render_text().contains("OUT OF RANGE [-2, 2]"), || "violation not printed".into())?;
    Ok(format!(
        "4 body types x {} variables (mean/std/min/max); [-{SCORE_BOUND}, {SCORE_BOUND}] check flags 1 injected point; band {:.2}-{:.2} advisory",
        expected.len(),
        SUMMARY_BAND.0,
        SUMMARY_BAND.1
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("AC1", "sentiment formula suite", ac1_sentiment),
        ("AC2", "numerics vs oracles", ac2_numerics),
        ("AC3", "partition algebra", ac3_partition),
        ("AC4", "planted-coefficient recovery", ac4_recovery),
        ("AC5", "sign-pattern reproduction", ac5_sign_pattern),
        ("AC6", "calendar laws", ac6_calendar),
        ("AC7", "determinism", ac7_determinism),
        ("AC8", "descriptive-report shape", ac8_descriptive),
    ];
    let mut failed = 0;
    for (id, name, f) in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("{id} PASS {name} [{secs:.2} s]: {detail}"),
            Err(why) => {
                failed += 1;
                println!("{id} FAIL {name} [{secs:.2} s]: {why}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 8 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
