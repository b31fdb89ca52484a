//! Answer scoring with SQuAD v1.1 semantics and template difficulty labels.

mod difficulty;
mod metrics;
mod report;

pub use difficulty::{label_questions, load_scores, load_template_map, partition_difficulty, Difficulty};
pub use metrics::{exact_match_score, normalize_answer, token_f1_score};
pub use report::{
    answers_as_predictions, evaluate_predictions, load_predictions, save_predictions, EvalReport, QuestionScore,
};
