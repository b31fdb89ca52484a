use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Serialize;

use clinirc_core::augmentation::{augment_question, KnowledgeBase, Lexicon};
use clinirc_core::dataset::{
    dataset_stats, load_dataset, save_dataset, split_by_documents, ClinicalNote, Dataset, QAPair,
};
use clinirc_core::evaluation::{
    evaluate_predictions, label_questions, load_predictions, load_scores, load_template_map, partition_difficulty,
    save_predictions,
};
use clinirc_core::generation::{generate_qa_pairs, load_annotations, load_templates};
use clinirc_core::knowledge::{save_loss_trace, train_transe, EmbeddingTable, KimParams, TransEConfig, WordVectors};
use clinirc_core::reader::{predict_span, KnowledgeResources, ReaderConfig};
use clinirc_core::sampling::sample_questions;
use clinirc_core::segmentation::{detect_headers, segment_note, shorten_context, HeaderLexicon};
use clinirc_core::{Error, Result};

use crate::manifest::{beside, sibling, RunManifest};
use crate::{
    AugmentArgs, Command, DifficultyArgs, EvaluateArgs, FuseArgs, GenerateArgs, KgeTrainArgs, ReadArgs, SampleArgs,
    SegmentArgs, SplitArgs, StatsArgs,
};

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Generate(a) => generate(a),
        Command::Split(a) => split(a),
        Command::Sample(a) => sample(a),
        Command::Segment(a) => segment(a),
        Command::Augment(a) => augment(a),
        Command::KgeTrain(a) => kge_train(a),
        Command::Fuse(a) => fuse(a),
        Command::Read(a) => read(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Difficulty(a) => difficulty(a),
        Command::Stats(a) => stats(a),
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut json = serde_json::to_string_pretty(value).expect("output serializes");
    json.push('\n');
    write_text(path, &json)
}

fn ensure_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => fs::create_dir_all(dir).map_err(|e| Error::Io {
            path: dir.to_path_buf(),
            source: e,
        }),
        _ => Ok(()),
    }
}

fn parse_ratios(s: &str) -> Result<(f64, f64, f64)> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::InvalidArgument(format!("bad ratios `{s}`: {e}")))?;
    match parts[..] {
        [a, b, c] => Ok((a, b, c)),
        _ => Err(Error::InvalidArgument(format!("expected three ratios, got `{s}`"))),
    }
}

fn generate(a: GenerateArgs) -> Result<()> {
    let json = fs::read_to_string(&a.notes).map_err(|e| Error::Io {
        path: a.notes.clone(),
        source: e,
    })?;
    let notes: Vec<ClinicalNote> = serde_json::from_str(&json).map_err(|e| Error::Parse {
        context: a.notes.display().to_string(),
        message: e.to_string(),
    })?;
    let templates = load_templates(&a.templates)?;
    let annotations = load_annotations(&a.annotations)?;

    let mut qa_pairs = Vec::new();
    for note in &notes {
        let own: Vec<_> = annotations
            .iter()
            .filter(|r| r.note_id == note.note_id())
            .cloned()
            .collect();
        qa_pairs.extend(generate_qa_pairs(note, &templates, &own, a.max_answer_tokens)?);
    }
    for r in &annotations {
        if !notes.iter().any(|n| n.note_id() == r.note_id) {
            return Err(Error::UnknownId {
                kind: "note for annotation",
                id: r.note_id.clone(),
            });
        }
    }
    log::info!("generated {} QA pairs over {} notes", qa_pairs.len(), notes.len());
    let dataset = Dataset::new(notes, qa_pairs);

    ensure_parent(&a.out)?;
    save_dataset(&dataset, &a.out)?;
    let mut m = RunManifest::new("generate", Some(a.seed));
    m.config("max_answer_tokens", a.max_answer_tokens)
        .config("n_qa_pairs", dataset.qa_pairs.len());
    m.input(&a.notes)?.input(&a.templates)?.input(&a.annotations)?;
    m.output(&a.out).write(&beside(&a.out))
}

fn split(a: SplitArgs) -> Result<()> {
    let ratios = parse_ratios(&a.ratios)?;
    let dataset = load_dataset(&a.input)?;
    let parts = split_by_documents(&dataset, ratios, a.seed)?;
    fs::create_dir_all(&a.out_dir).map_err(|e| Error::Io {
        path: a.out_dir.clone(),
        source: e,
    })?;

    let mut m = RunManifest::new("split", Some(a.seed));
    m.config("ratios", [ratios.0, ratios.1, ratios.2]);
    m.input(&a.input)?;
    for (name, part) in [("train", &parts.train), ("dev", &parts.dev), ("test", &parts.test)] {
        let path = a.out_dir.join(format!("{name}.json"));
        save_dataset(part, &path)?;
        m.config(&format!("{name}_notes"), part.notes.len())
            .config(&format!("{name}_questions"), part.qa_pairs.len())
            .output(&path);
        log::info!("{name}: {} notes, {} questions", part.notes.len(), part.qa_pairs.len());
    }
    m.write(&a.out_dir.join("manifest.json"))
}

fn sample(a: SampleArgs) -> Result<()> {
    let dataset = load_dataset(&a.input)?;
    let sampled = sample_questions(&dataset, a.rate, a.seed)?;
    ensure_parent(&a.out)?;
    save_dataset(&sampled, &a.out)?;
    let mut m = RunManifest::new("sample", Some(a.seed));
    m.config("rate", a.rate).config("n_qa_pairs", sampled.qa_pairs.len());
    m.input(&a.input)?;
    m.output(&a.out).write(&beside(&a.out))
}

/// Each question gets the section holding its answer as its context; a
/// question whose answers all cross section boundaries is dropped.
fn segment(a: SegmentArgs) -> Result<()> {
    let dataset = load_dataset(&a.input)?;
    let lexicon = match &a.header_lexicon {
        Some(path) => HeaderLexicon::load(path)?,
        None => HeaderLexicon::default(),
    };

    let mut contexts: Vec<ClinicalNote> = Vec::new();
    let mut context_of: BTreeMap<(String, String), String> = BTreeMap::new();
    let mut per_note: BTreeMap<&str, usize> = BTreeMap::new();
    let mut qa_pairs = Vec::new();
    let mut dropped = Vec::new();
    for note in &dataset.notes {
        let sections = segment_note(note, &detect_headers(note, &lexicon));
        for qa in dataset.qa_for_note(note.note_id()) {
            let (text, answers) = match shorten_context(qa, note, &sections) {
                Ok(shortened) => shortened,
                Err(Error::CrossesSection { question_id }) => {
                    log::warn!("dropping `{question_id}`: every answer crosses a section boundary");
                    dropped.push(question_id);
                    continue;
                }
                Err(e) => return Err(e),
            };
            let key = (note.note_id().to_string(), text.clone());
            let context_id = context_of
                .entry(key)
                .or_insert_with(|| {
                    let k = per_note.entry(note.note_id()).or_insert(0);
                    *k += 1;
                    let id = format!("{}#{}", note.note_id(), k);
                    contexts.push(ClinicalNote::new(id.clone(), text));
                    id
                })
                .clone();
            qa_pairs.push(QAPair {
                note_id: context_id,
                answers,
                ..qa.clone()
            });
        }
    }
    let shortened = Dataset::new(contexts, qa_pairs);
    ensure_parent(&a.out)?;
    save_dataset(&shortened, &a.out)?;
    let mut m = RunManifest::new("segment", a.seed);
    m.config("n_contexts", shortened.notes.len())
        .config("n_qa_pairs", shortened.qa_pairs.len())
        .config("dropped_crossing_section", &dropped);
    m.input(&a.input)?;
    if let Some(path) = &a.header_lexicon {
        m.input(path)?;
    }
    m.output(&a.out).write(&beside(&a.out))
}

fn augment(a: AugmentArgs) -> Result<()> {
    let dataset = load_dataset(&a.input)?;
    let kb = KnowledgeBase::load(&a.entities, &a.triples)?;
    let lexicon = Lexicon::load(&a.lexicon)?;

    let mut qa_pairs = Vec::new();
    let mut substitutions = Vec::new();
    for qa in &dataset.qa_pairs {
        if let Some(aug) = augment_question(qa, &kb, &lexicon, a.seed)? {
            qa_pairs.push(aug.qa);
            substitutions.push(aug.substitution);
        }
    }
    log::info!("augmented {} of {} questions", qa_pairs.len(), dataset.qa_pairs.len());
    let augmented = Dataset::new(dataset.notes.clone(), qa_pairs);
    ensure_parent(&a.out)?;
    save_dataset(&augmented, &a.out)?;
    let subs_path = sibling(&a.out, "substitutions.json");
    write_json(&subs_path, &substitutions)?;

    let mut m = RunManifest::new("augment", Some(a.seed));
    m.config("n_input", dataset.qa_pairs.len())
        .config("n_augmented", augmented.qa_pairs.len());
    m.input(&a.input)?
        .input(&a.entities)?
        .input(&a.triples)?
        .input(&a.lexicon)?;
    m.output(&a.out).output(&subs_path).write(&beside(&a.out))
}

fn kge_train(a: KgeTrainArgs) -> Result<()> {
    let kb = KnowledgeBase::load(&a.entities, &a.triples)?;
    let config = TransEConfig {
        dim: a.dim,
        margin: a.margin,
        learning_rate: a.learning_rate,
        epochs: a.epochs,
        batch_size: a.batch_size,
        norm: a.norm,
        seed: a.seed,
    };
    let trained = train_transe(kb.triples(), &kb.entity_ids(), &config)?;
    if let (Some(first), Some(last)) = (trained.loss_trace.first(), trained.loss_trace.last()) {
        log::info!("TransE loss {first:.4} -> {last:.4}");
    }
    ensure_parent(&a.out)?;
    trained.table.save(&a.out)?;
    let loss_path = sibling(&a.out, "loss.csv");
    save_loss_trace(&trained.loss_trace, &loss_path)?;

    let mut m = RunManifest::new("kge-train", Some(a.seed));
    m.config("transe", &config);
    m.input(&a.entities)?.input(&a.triples)?;
    m.output(&a.out).output(&loss_path).write(&beside(&a.out))
}

fn fuse(a: FuseArgs) -> Result<()> {
    let embeddings = EmbeddingTable::load(&a.embeddings)?;
    let params = KimParams::random(a.out_dim, a.word_dim, embeddings.dim(), a.activation, a.seed)?;
    ensure_parent(&a.out)?;
    params.save(&a.out)?;
    let mut m = RunManifest::new("fuse", Some(a.seed));
    m.config("out_dim", a.out_dim)
        .config("word_dim", a.word_dim)
        .config("entity_dim", embeddings.dim())
        .config("activation", a.activation)
        .config("init", "glorot_uniform, zero bias");
    m.input(&a.embeddings)?;
    m.output(&a.out).write(&beside(&a.out))
}

fn read(a: ReadArgs) -> Result<()> {
    let dataset = load_dataset(&a.input)?;
    let mut m = RunManifest::new("read", Some(a.seed));
    m.input(&a.input)?;

    let resources = match (&a.embeddings, &a.params, &a.lexicon) {
        (Some(emb), Some(params), Some(lex)) => {
            let params = KimParams::load(params)?;
            let word_vectors = match &a.word_vectors {
                Some(path) => WordVectors::load_tsv(path, a.seed)?,
                None => WordVectors::random(params.word_dim(), a.seed),
            };
            for path in [Some(emb), a.params.as_ref(), Some(lex), a.word_vectors.as_ref()]
                .into_iter()
                .flatten()
            {
                m.input(path)?;
            }
            Some(KnowledgeResources {
                embeddings: EmbeddingTable::load(emb)?,
                params,
                lexicon: Lexicon::load(lex)?,
                word_vectors,
            })
        }
        _ => None,
    };
    let config = match &resources {
        Some(_) => ReaderConfig::knowledge(a.lambda)?,
        None if a.lambda == 0.0 => ReaderConfig::lexical(),
        None => {
            return Err(Error::InvalidArgument(format!(
                "--lambda {} needs --embeddings, --params and --lexicon",
                a.lambda
            )))
        }
    };

    let mut predictions = BTreeMap::new();
    for qa in &dataset.qa_pairs {
        let note = dataset.note(&qa.note_id).ok_or_else(|| Error::UnknownId {
            kind: "note",
            id: qa.note_id.clone(),
        })?;
        let span = predict_span(&qa.question, note, &config, resources.as_ref())?;
        predictions.insert(qa.question_id.clone(), span.text);
    }
    ensure_parent(&a.out)?;
    save_predictions(&predictions, &a.out)?;
    m.config("reader", &config);
    m.output(&a.out).write(&beside(&a.out))
}

fn evaluate(a: EvaluateArgs) -> Result<()> {
    let predictions = load_predictions(&a.pred)?;
    let gold = load_dataset(&a.gold)?;
    let report = evaluate_predictions(&predictions, &gold)?;
    log::info!(
        "EM {:.2} F1 {:.2} over {} questions",
        report.exact_match,
        report.f1,
        report.n_evaluated
    );
    ensure_parent(&a.out)?;
    write_text(&a.out, &report.to_json())?;
    let mut m = RunManifest::new("evaluate", a.seed);
    m.config("exact_match", report.exact_match).config("f1", report.f1);
    m.input(&a.pred)?.input(&a.gold)?;
    m.output(&a.out).write(&beside(&a.out))
}

#[derive(Serialize)]
struct DifficultyReport {
    templates: BTreeMap<String, clinirc_core::evaluation::Difficulty>,
    questions: BTreeMap<String, clinirc_core::evaluation::Difficulty>,
}

fn difficulty(a: DifficultyArgs) -> Result<()> {
    let scores = load_scores(&a.scores)?;
    let mut m = RunManifest::new("difficulty", a.seed);
    m.input(&a.scores)?;
    let template_of = match (&a.templates, &a.gold) {
        (Some(path), _) => {
            m.input(path)?;
            load_template_map(path)?
        }
        (None, Some(path)) => {
            m.input(path)?;
            load_dataset(path)?
                .qa_pairs
                .into_iter()
                .filter_map(|qa| qa.template_id.map(|t| (qa.question_id, t)))
                .collect()
        }
        (None, None) => unreachable!("clap requires --templates or --gold"),
    };
    let templates = partition_difficulty(&scores, &template_of)?;
    let questions = label_questions(&templates, &template_of)
        .into_iter()
        .filter(|(q, _)| scores.contains_key(q))
        .collect();
    ensure_parent(&a.out)?;
    write_json(&a.out, &DifficultyReport { templates, questions })?;
    m.output(&a.out).write(&beside(&a.out))
}

fn stats(a: StatsArgs) -> Result<()> {
    let dataset = load_dataset(&a.input)?;
    let report = dataset_stats(&dataset);
    match &a.out {
        Some(out) => {
            ensure_parent(out)?;
            write_json(out, &report)?;
            let mut m = RunManifest::new("stats", a.seed);
            m.input(&a.input)?;
            m.output(out).write(&beside(out))
        }
        None => {
            println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
            Ok(())
        }
    }
}
