use std::ffi::OsString;
use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use qeclab::dataset::{build_enhanced_set, generate, split_eval, AugmentationSpec, Dataset, EnhancedCounts};
use qeclab::eval::{sweep_curve, to_csv, Decoder};
use qeclab::explain::{occlusion_saliency, ChannelMasking, OcclusionConfig};
use qeclab::hld::{architecture_manifest, build_cnn, build_cnn_with_channels, build_ffnn, HighLevelDecoder, NoiseKind};
use qeclab::nn::{history_csv, read_manifest_file, train_with_progress, AdamConfig, ModelFile, SampleSource, TrainConfig};
use qeclab::noise::{sample, NoiseModel, SeedSpec};
use qeclab::{CodeLayout, LogicalClass};
use qeclab_service::api::{resolve, ProbeInput};
use qeclab_service::ModelStore;

use crate::args::*;
use crate::CliError;

type CliResult<T = ()> = Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn existing(path: &Path, what: &str) -> CliResult<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(usage(format!("{what} {} does not exist", path.display())))
    }
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s: OsString = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn file_name(path: &Path) -> String {
    path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
}

pub fn run(command: Command) -> CliResult {
    match command {
        Command::Generate(a) => cmd_generate(a),
        Command::Train(a) => cmd_train(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Augment(a) => cmd_augment(a),
        Command::Saliency(a) => cmd_saliency(a),
        Command::Serve(a) => cmd_serve(a),
        Command::Inspect(a) => cmd_inspect(a),
    }
}

fn noise_model(kind: NoiseArg, p: f64, q: Option<f64>, cycles: Option<usize>) -> CliResult<NoiseModel> {
    match kind {
        NoiseArg::Depolarizing => {
            if q.is_some() || cycles.is_some() {
                return Err(usage("--q and --cycles apply only to phenomenological noise"));
            }
            Ok(NoiseModel::depolarizing(p)?)
        }
        NoiseArg::Phenomenological => match (q, cycles) {
            (Some(q), Some(c)) => Ok(NoiseModel::phenomenological(p, q, c)?),
            _ => Err(usage("phenomenological noise needs --q and --cycles")),
        },
    }
}

fn histogram_line(data: &Dataset) -> String {
    let h = data.label_histogram();
    format!("labels I={} X={} Z={} Y={}", h[0], h[1], h[2], h[3])
}

fn cmd_generate(a: GenerateArgs) -> CliResult {
    let layout = CodeLayout::new(a.distance)?;
    let noise = noise_model(a.noise.noise, a.p, a.noise.q, a.noise.cycles)?;
    let data = generate(&layout, &noise, a.count, a.seed)?;
    data.save(&a.out)?;
    println!("wrote {} records to {}; {}", data.len(), a.out.display(), histogram_line(&data));
    Ok(())
}

fn cmd_train(a: TrainArgs) -> CliResult {
    existing(&a.dataset, "dataset")?;
    let data = Dataset::load(&a.dataset)?;
    let header = *data.header();
    let d = header.distance as usize;
    let kind = NoiseKind::from_code(header.noise_kind)?;
    let channels = data.channels();
    let spec = match a.arch {
        ArchArg::Cnn => build_cnn_with_channels(d, kind, false, channels)?,
        ArchArg::CnnDilated => build_cnn_with_channels(d, kind, true, channels)?,
        ArchArg::Ffnn => {
            let widths: [usize; 3] = a.hidden.as_slice().try_into().map_err(|_| usage("--hidden takes three widths"))?;
            build_ffnn(d, widths, channels)?
        }
    };
    let init_parameters = match &a.init_weights {
        Some(path) => {
            existing(path, "model")?;
            let m = ModelFile::load(path)?;
            if m.spec != spec {
                return Err(usage(format!("{} does not have the {:?} architecture for this dataset", path.display(), a.arch)));
            }
            Some(m.params)
        }
        None => None,
    };
    let config = TrainConfig {
        batch_size: a.batch,
        epochs: a.epochs,
        adam: AdamConfig { learning_rate: a.lr, ..AdamConfig::default() },
        seed: a.seed,
        init_parameters,
        ..TrainConfig::default()
    };
    let (train_set, eval_set) = match a.eval_fraction {
        Some(f) => {
            let (t, e) = split_eval(&data, f, a.seed)?;
            (t, Some(e))
        }
        None => (data, None),
    };
    let epochs = a.epochs;
    let outcome = train_with_progress(&spec, &train_set, eval_set.as_ref().map(|e| e as &dyn SampleSource), &config, |s| {
        let eval = match (s.eval_loss, s.eval_accuracy) {
            (Some(l), Some(acc)) => format!(" eval_loss={l:.5} eval_acc={acc:.4}"),
            _ => String::new(),
        };
        eprintln!("epoch {}/{epochs} loss={:.5} acc={:.4}{eval}", s.epoch, s.train_loss, s.train_accuracy);
    })?;

    let mut model = ModelFile::new(spec, outcome.params, a.seed);
    let arch = match a.arch {
        ArchArg::Cnn => "cnn",
        ArchArg::CnnDilated => "cnn-dilated",
        ArchArg::Ffnn => "ffnn",
    };
    let last = outcome.history.last().expect("at least one epoch");
    let meta = [
        ("arch", arch.to_string()),
        ("noise", kind.name().to_string()),
        ("d", d.to_string()),
        ("p", header.p.to_string()),
        ("q", header.q.to_string()),
        ("cycles", header.cycles.to_string()),
        ("dataset", file_name(&a.dataset)),
        ("train_records", train_set.len().to_string()),
        ("epochs", a.epochs.to_string()),
        ("batch", a.batch.to_string()),
        ("lr", a.lr.to_string()),
        ("train_loss", last.train_loss.to_string()),
        ("train_accuracy", last.train_accuracy.to_string()),
    ];
    for (k, v) in meta {
        model.metadata.insert(k.to_string(), v);
    }
    if let Some(p) = &a.init_weights {
        model.metadata.insert("init_weights".into(), file_name(p));
    }
    if let Some(acc) = last.eval_accuracy {
        model.metadata.insert("eval_accuracy".into(), acc.to_string());
    }
    model.save(&a.out)?;
    let history = a.history.clone().unwrap_or_else(|| with_suffix(&a.out, ".history.csv"));
    fs::write(&history, history_csv(&outcome.history))?;
    println!("wrote model {} ({} weights) and history {}", a.out.display(), model.params.scalar_count(), history.display());
    Ok(())
}

fn load_decoder(path: &Path) -> CliResult<(HighLevelDecoder, ModelFile)> {
    existing(path, "model")?;
    let file = ModelFile::load(path)?;
    Ok((HighLevelDecoder::from_model(&file)?, file))
}

fn cmd_eval(a: EvalArgs) -> CliResult {
    let model = match &a.model {
        Some(path) => Some(load_decoder(path)?.0),
        None => None,
    };
    if a.decoder.contains(&DecoderArg::Hld) && model.is_none() {
        return Err(usage("the hld decoder needs --model"));
    }
    let d = match (a.distance, &model) {
        (Some(d), Some(m)) if d != m.layout().distance() => {
            return Err(usage(format!("--distance {d} does not match the model's d={}", m.layout().distance())))
        }
        (Some(d), _) => d,
        (None, Some(m)) => m.layout().distance(),
        (None, None) => return Err(usage("give --distance or --model")),
    };
    let layout = CodeLayout::new(d)?;
    let mut noises = Vec::with_capacity(a.p_list.len());
    for &p in &a.p_list {
        let q = match a.q.as_deref() {
            None => None,
            Some("p") => Some(p),
            Some(s) => Some(s.parse::<f64>().map_err(|_| usage(format!("--q {s:?} is neither a number nor p")))?),
        };
        noises.push(noise_model(a.noise, p, q, a.cycles)?);
    }
    let decoders: Vec<Decoder> = a
        .decoder
        .iter()
        .map(|d| match d {
            DecoderArg::Simple => Decoder::Simple,
            DecoderArg::Mwpm => Decoder::Mwpm,
            DecoderArg::AlwaysI => Decoder::AlwaysI,
            DecoderArg::Hld => Decoder::Hld(model.as_ref().expect("checked above")),
        })
        .collect();
    let points = sweep_curve(&decoders, &layout, &noises, a.n, a.seed)?;
    let csv = to_csv(&points);
    match &a.out {
        Some(path) => fs::write(path, csv)?,
        None => print!("{csv}"),
    }
    Ok(())
}

fn cmd_augment(a: AugmentArgs) -> CliResult {
    let layout = CodeLayout::new(a.distance)?;
    if a.chain_length == 0 || a.chain_length > a.distance {
        return Err(usage(format!("--chain-length must lie in 1..={}", a.distance)));
    }
    let &[chains, base, hard] = a.counts.as_slice() else {
        return Err(usage("--counts takes three numbers: chains, base, hard"));
    };
    let counts = EnhancedCounts { chains, base, hard, p_base: a.p1, p_hard: a.p2 };
    let data = build_enhanced_set(&layout, AugmentationSpec { chain_length: a.chain_length }, counts, a.seed)?;
    data.save(&a.out)?;
    println!("wrote {} records to {}; {}", data.len(), a.out.display(), histogram_line(&data));
    Ok(())
}

fn cmd_saliency(a: SaliencyArgs) -> CliResult {
    let (decoder, file) = load_decoder(&a.model)?;
    let layout = decoder.layout().clone();
    let channels = decoder.channels();
    let stack = if let Some(path) = &a.input_json {
        existing(path, "input")?;
        let text = fs::read_to_string(path)?;
        let probe: ProbeInput = serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
        resolve(&layout, &probe, channels).map_err(|e| usage(e.message))?.stack
    } else {
        let noise = if channels == 1 {
            NoiseModel::depolarizing(a.p)?
        } else {
            let q = a.q.or_else(|| file.meta("q").and_then(|v| v.parse().ok())).unwrap_or(a.p);
            NoiseModel::phenomenological(a.p, q, channels - 1)?
        };
        sample(&layout, &noise, SeedSpec::new(a.seed), a.index).stack
    };
    let reference = match &a.reference {
        Some(s) => Some(s.parse::<LogicalClass>()?),
        None => None,
    };
    let config = OcclusionConfig {
        patch_h: a.patch,
        patch_w: a.patch,
        stride: a.stride,
        masking: if a.per_channel { ChannelMasking::PerChannel } else { ChannelMasking::Joint },
        ..OcclusionConfig::default()
    };
    let input = layout.encode_input(&stack)?;
    let map = occlusion_saliency(decoder.network(), decoder.params(), input.data(), reference, &config)?;
    let several = map.coarse.len() > 1;
    for (k, (coarse, up)) in map.coarse.iter().zip(&map.upsampled).enumerate() {
        let prefix = if several { with_suffix(&a.out, &format!(".ch{k}")) } else { a.out.clone() };
        fs::write(with_suffix(&prefix, ".csv"), coarse.to_csv())?;
        fs::write(with_suffix(&prefix, ".upsampled.csv"), up.to_csv())?;
        fs::write(with_suffix(&prefix, ".pgm"), up.to_pgm())?;
        let peaks: Vec<String> = coarse.argmax().iter().map(|(r, c)| format!("({r},{c})")).collect();
        println!("map {k}: max {} at {}", coarse.max(), peaks.join(" "));
    }
    let p = map.prediction.probabilities;
    println!(
        "predicted {} (I={:.4} X={:.4} Z={:.4} Y={:.4}), reference {}",
        map.prediction.class, p[0], p[1], p[2], p[3], map.reference
    );
    Ok(())
}

fn cmd_serve(a: ServeArgs) -> CliResult {
    let addr: SocketAddr = format!("{}:{}", a.host, a.port).parse().map_err(|e| usage(format!("bad address: {e}")))?;
    if let Some(dir) = &a.models_dir {
        if !dir.is_dir() {
            return Err(usage(format!("models directory {} does not exist", dir.display())));
        }
    }
    let store = ModelStore::new(a.models_dir);
    let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    println!("listening on http://{addr}");
    runtime.block_on(qeclab_service::serve(addr, store))?;
    Ok(())
}

fn cmd_inspect(a: InspectArgs) -> CliResult {
    if let Some(path) = &a.dataset {
        existing(path, "dataset")?;
        let data = Dataset::load(path)?;
        let h = data.header();
        println!("format SYQD v{}", h.version);
        println!("distance {}", h.distance);
        println!("channels {}", h.channels);
        println!("noise {} p={} q={} cycles={}", h.noise_name(), h.p, h.q, h.cycles);
        println!("records {}", h.record_count);
        println!("seed {}", h.master_seed);
        println!("{}", histogram_line(&data));
    } else if let Some(path) = &a.model {
        existing(path, "model")?;
        let m = read_manifest_file(path)?;
        println!("input {}x{}x{}", m.spec.input[0], m.spec.input[1], m.spec.input[2]);
        for l in &m.spec.layers {
            println!("layer {l}");
        }
        println!("params {}", m.spec.param_count()?);
        println!("seed {}", m.seed);
        for (k, v) in &m.metadata {
            println!("meta {k} {v}");
        }
    } else if let Some(d) = a.builtin {
        let kind = match a.noise {
            NoiseArg::Depolarizing => NoiseKind::Depolarizing,
            NoiseArg::Phenomenological => NoiseKind::Phenomenological,
        };
        let spec = build_cnn(d, kind, a.dilated)?;
        println!("input {}x{}x{}", spec.input[0], spec.input[1], spec.input[2]);
        for l in &spec.layers {
            println!("layer {l}");
        }
        println!("params {}", spec.param_count()?);
    } else {
        print!("{}", architecture_manifest());
    }
    Ok(())
}
