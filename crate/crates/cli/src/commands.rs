use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use tlnn::extraction::{extract_formula, regions, write_regions_csv};
use tlnn::learner::{evaluate, train, write_history_csv};
use tlnn::logic::{format_formula, format_pruned};
use tlnn::network::checkpoint;
use tlnn::signals::{load_csv, one_vs_rest, preprocess_dataset, synth_corpus, Condition, Dataset, Label};

use crate::config::Config;
use crate::error::CliError;
use crate::Command;

type Result<T> = std::result::Result<T, CliError>;

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Synth { common, out, seed, count } => {
            let mut cfg = Config::load(common.config.as_deref())?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(c) = count {
                cfg.synth.count = c;
            }
            synth(&cfg, &out)
        }
        Command::Preprocess {
            common,
            data,
            out,
            target,
            test_out,
            seed,
        } => {
            let mut cfg = Config::load(common.config.as_deref())?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            preprocess(&cfg, &data, &out, target.zip(test_out))
        }
        Command::Train {
            common,
            data,
            out,
            history,
            epochs,
            seed,
            max_neurons,
            learning_rate,
        } => {
            let mut cfg = Config::load(common.config.as_deref())?;
            let t = &mut cfg.train;
            if let Some(v) = epochs {
                t.epochs = v;
            }
            if let Some(v) = seed {
                t.seed = v;
            }
            if let Some(v) = max_neurons {
                t.max_neurons = v;
            }
            if let Some(v) = learning_rate {
                t.learning_rate = v;
            }
            let history = history.unwrap_or_else(|| out.with_extension("history.csv"));
            train_cmd(&cfg, &data, &out, &history)
        }
        Command::Eval { checkpoint, data, out } => eval(&checkpoint, &data, out.as_deref()),
        Command::Extract {
            checkpoint,
            data,
            strip_weights,
            compact,
            export_regions,
            out,
        } => extract(
            &checkpoint,
            &data,
            strip_weights,
            compact,
            export_regions.as_deref(),
            out.as_deref(),
        ),
    }
}

fn synth(cfg: &Config, out: &Path) -> Result<()> {
    let corpus = synth_corpus::<f64>(&cfg.synth, cfg.seed)?;
    corpus.write_csv(out)?;
    println!("wrote {} samples to {}", corpus.len(), out.display());
    for c in Condition::ALL {
        let k = corpus.iter().filter(|s| s.condition == Some(c)).count();
        println!("  {c}: {k}");
    }
    Ok(())
}

fn preprocess(cfg: &Config, data: &Path, out: &Path, split: Option<(Condition, PathBuf)>) -> Result<()> {
    let raw = load_csv::<f64>(data)?;
    let (features, scaling) = preprocess_dataset(&raw, &cfg.preprocess)?;
    if let Some(mm) = scaling {
        println!("scaled by min {} max {}", mm.min, mm.max);
    }
    match split {
        None => {
            features.write_csv(out)?;
            println!("wrote {} feature signals of length {} to {}", features.len(), features.signal_len(), out.display());
        }
        Some((target, test_out)) => {
            let (tr, te) = one_vs_rest(&features, target, &cfg.split, cfg.seed)?;
            tr.write_csv(out)?;
            te.write_csv(&test_out)?;
            println!("{target} vs rest: train {} to {}, test {} to {}", tr.len(), out.display(), te.len(), test_out.display());
        }
    }
    Ok(())
}

fn train_cmd(cfg: &Config, data: &Path, out: &Path, history_path: &Path) -> Result<()> {
    let ds = load_csv::<f64>(data)?;
    let (params, history) = train(&ds, &cfg.train)?;
    checkpoint::save(&params, out)?;
    write_history_csv(&history, history_path)?;
    let m = evaluate(&params, &ds)?;
    println!(
        "trained {} epochs, {} neurons: train error {:.3}, mean robustness {:.6}",
        cfg.train.epochs,
        params.len(),
        m.error_rate,
        m.mean_robustness
    );
    println!("checkpoint {}, history {}", out.display(), history_path.display());
    Ok(())
}

fn eval(ckpt: &Path, data: &Path, out: Option<&Path>) -> Result<()> {
    let params = checkpoint::load::<f64>(ckpt)?;
    let ds = load_csv::<f64>(data)?;
    let m = evaluate(&params, &ds)?;
    println!("error_rate {:.3}", m.error_rate);
    println!("mean_robustness {}", m.mean_robustness);
    if let Some(path) = out {
        write_per_sample(&ds, &m.robustness, path)?;
    }
    Ok(())
}

fn write_per_sample(ds: &Dataset<f64>, robustness: &[f64], path: &Path) -> Result<()> {
    let io = |e| CliError::io(path, e);
    let mut f = File::create(path).map_err(io)?;
    writeln!(f, "sample,label,robustness,predicted").map_err(io)?;
    for (i, (s, &r)) in ds.iter().zip(robustness).enumerate() {
        let pred = Label::from_robustness(r).as_int();
        writeln!(f, "{i},{},{r},{pred}", s.label.as_int()).map_err(io)?;
    }
    Ok(())
}

fn extract(
    ckpt: &Path,
    data: &Path,
    strip: bool,
    compact: bool,
    regions_out: Option<&Path>,
    out: Option<&Path>,
) -> Result<()> {
    let params = checkpoint::load::<f64>(ckpt)?;
    let ds = load_csv::<f64>(data)?;
    let formula = extract_formula(&params, &ds)?;
    if let Some(path) = regions_out {
        write_regions_csv(&regions(&formula), path)?;
    }
    let text = if strip {
        format_formula(&formula.strip_weights())
    } else if compact {
        format_pruned(&formula, 1e-3)
    } else {
        format_formula(&formula)
    };
    match out {
        Some(path) => std::fs::write(path, format!("{text}\n")).map_err(|e| CliError::io(path, e))?,
        None => println!("{text}"),
    }
    Ok(())
}
