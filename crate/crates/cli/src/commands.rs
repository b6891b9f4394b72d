use std::fs;
use std::path::Path;

use anyhow::Context;

use gradecast::cart::{self, to_dot};
use gradecast::eval::{evaluate, train_test_split};
use gradecast::whatif::{report, WhatIfError};
use gradecast::{Dataset, HyperParams, Prediction, SplitConfig, Tree, WhatIfConfig};
use gradecast_service::ServiceConfig;

use crate::input::{load_dataset, load_model, read_vector, usage, CliError};
use crate::{
    CleanArgs, Command, EvaluateArgs, ExportDotArgs, PredictArgs, ServeArgs, SplitArgs, TrainArgs,
    WhatIfArgs,
};

pub fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Clean(a) => clean(a),
        Command::Train(a) => train(a),
        Command::Evaluate(a) => evaluate_cmd(a),
        Command::Predict(a) => predict(a),
        Command::Whatif(a) => whatif(a),
        Command::ExportDot(a) => export_dot(a),
        Command::Serve(a) => serve(a),
    }
}

fn write_file(path: &Path, contents: &str) -> anyhow::Result<()> {
    fs::write(path, contents).with_context(|| format!("cannot write `{}`", path.display()))
}

fn split_config(a: &SplitArgs) -> Result<SplitConfig, CliError> {
    let cfg = SplitConfig {
        test_fraction: a.test_fraction,
        seed: a.seed,
        shuffle: !a.no_shuffle,
    };
    cfg.validate()
        .map_err(|e| usage(format!("--test-fraction: {e}")))?;
    Ok(cfg)
}

fn split(data: &Dataset, cfg: &SplitConfig) -> anyhow::Result<(Dataset, Dataset)> {
    let (train, test) = train_test_split(data, cfg)?;
    println!("seed: {}", cfg.seed);
    for (name, part) in [("train", &train), ("test", &test)] {
        let c = part.class_counts();
        println!(
            "{name}: {} records (fail {}, pass {})",
            part.len(),
            c.fail,
            c.pass
        );
    }
    Ok((train, test))
}

fn clean(a: CleanArgs) -> Result<(), CliError> {
    let (data, report) = load_dataset(&a.input.input, !a.input.no_range_check)?;
    println!("{report}");
    if let Some(out) = &a.out {
        write_file(out, &data.to_csv())?;
        println!("cleaned records written to {}", out.display());
    }
    Ok(())
}

fn train(a: TrainArgs) -> Result<(), CliError> {
    let params = HyperParams {
        criterion: a.criterion,
        max_depth: a.max_depth,
        min_samples_split: a.min_samples_split,
        min_samples_leaf: a.min_samples_leaf,
    };
    params.validate().map_err(|e| usage(e.to_string()))?;
    let cfg = split_config(&a.split)?;

    let (data, _) = load_dataset(&a.input.input, !a.input.no_range_check)?;
    let (train, test) = split(&data, &cfg)?;
    let tree = Tree::fit_dataset(&train, params).context("training failed")?;
    let report = evaluate(&tree, train.len(), &test).context("evaluation failed")?;
    print!("{report}");

    write_file(&a.out, &cart::serialize(&tree))?;
    println!(
        "model written to {} ({} nodes, depth {})",
        a.out.display(),
        tree.len(),
        tree.depth()
    );
    if let Some(dot) = &a.dot {
        write_file(dot, &to_dot(&tree))?;
        println!("tree diagram written to {}", dot.display());
    }
    Ok(())
}

fn evaluate_cmd(a: EvaluateArgs) -> Result<(), CliError> {
    let cfg = split_config(&a.split)?;
    let tree = load_model(&a.model)?;
    let (data, _) = load_dataset(&a.input.input, !a.input.no_range_check)?;
    let report = if a.all {
        println!("records: {}", data.len());
        evaluate(&tree, 0, &data)
    } else {
        let (train, test) = split(&data, &cfg)?;
        evaluate(&tree, train.len(), &test)
    }
    .context("evaluation failed")?;
    print!("{report}");
    Ok(())
}

fn print_prediction(tree: &Tree, x: &[f64], p: &Prediction) {
    println!(
        "label={} probability={:.6}",
        p.label.as_u8(),
        p.pass_probability
    );
    println!("path:");
    let names = tree.feature_names();
    for step in &p.path {
        let (op, side) = if step.went_left {
            ("<=", "left")
        } else {
            (">", "right")
        };
        println!(
            "  node {}: {} = {} {op} {} ({side})",
            step.node, names[step.feature], x[step.feature], step.threshold
        );
    }
    if let Some(leaf) = tree.node(p.leaf) {
        println!(
            "  leaf {}: samples = {}, value = {}",
            leaf.id,
            leaf.counts.total(),
            leaf.counts
        );
    }
}

fn predict(a: PredictArgs) -> Result<(), CliError> {
    let tree = load_model(&a.model)?;
    let x = read_vector(&a.vector, tree.feature_names())?;
    let p = tree.predict(&x).context("prediction failed")?;
    if a.json {
        println!(
            "{}",
            serde_json::to_string_pretty(&p).expect("prediction serializes")
        );
    } else {
        print_prediction(&tree, &x, &p);
    }
    Ok(())
}

fn whatif_config(a: &WhatIfArgs, names: &[String]) -> Result<WhatIfConfig, CliError> {
    let mut cfg = WhatIfConfig::for_features(names.len());
    cfg.step = a.step;
    cfg.depth = a.depth;
    match a.caps.len() {
        0 => {}
        1 => cfg.caps = vec![a.caps[0]; names.len()],
        n if n == names.len() => cfg.caps = a.caps.clone(),
        n => {
            return Err(usage(format!(
                "--caps takes 1 or {} values, got {n}",
                names.len()
            )))
        }
    }
    if !a.mutable.is_empty() {
        cfg.mutable = a
            .mutable
            .iter()
            .map(|m| {
                names
                    .iter()
                    .position(|n| n == m)
                    .or_else(|| m.parse::<usize>().ok().filter(|&i| i < names.len()))
                    .ok_or_else(|| usage(format!("--mutable: unknown feature `{m}`")))
            })
            .collect::<Result<_, _>>()?;
        cfg.mutable.sort_unstable();
        cfg.mutable.dedup();
    }
    Ok(cfg)
}

fn whatif(a: WhatIfArgs) -> Result<(), CliError> {
    let tree = load_model(&a.model)?;
    let names = tree.feature_names();
    let x = read_vector(&a.vector, names)?;
    let cfg = whatif_config(&a, names)?;
    let rep = report(&tree, names, &x, &cfg).map_err(|e| match e {
        WhatIfError::Config(m) => usage(m),
        other => CliError::Failure(anyhow::Error::new(other).context("what-if search failed")),
    })?;
    if a.json {
        println!(
            "{}",
            serde_json::to_string_pretty(&rep).expect("report serializes")
        );
    } else {
        println!(
            "current: label={} probability={:.6}",
            rep.base.label.as_u8(),
            rep.base.pass_probability
        );
        print!("{}", rep.table);
    }
    Ok(())
}

fn export_dot(a: ExportDotArgs) -> Result<(), CliError> {
    let tree = load_model(&a.model)?;
    let dot = to_dot(&tree);
    match &a.out {
        Some(path) => write_file(path, &dot)?,
        None => print!("{dot}"),
    }
    Ok(())
}

fn serve(a: ServeArgs) -> Result<(), CliError> {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("info")),
        )
        .with_writer(std::io::stderr)
        .init();
    let config = ServiceConfig {
        data_dir: a.data_dir,
        addr: a.addr,
    };
    let runtime = tokio::runtime::Runtime::new().context("cannot start async runtime")?;
    runtime
        .block_on(gradecast_service::serve(&config))
        .context("service failed")?;
    Ok(())
}
