use serde_json::json;

use super::llm::{complete_structured, LlmClient, LlmTask, RetryPolicy, TripletResponse};
use super::PromptTriplet;
use crate::error::{Error, Result};

/// Captions naming more sound sources than this are dropped.
pub const MAX_ELEMENTS: u32 = 2;

fn non_blank(s: Option<String>) -> Option<String> {
    s.map(|v| v.trim().to_string()).filter(|v| !v.is_empty() && v != "-" && v != "--")
}

/// Asks the model for an edit instruction, output caption, element count
/// and optional negative captions for `input_caption`.
pub fn generate_prompt_triplet(
    input_caption: &str,
    source_dataset: &str,
    llm: &dyn LlmClient,
    policy: RetryPolicy,
) -> Result<PromptTriplet> {
    if input_caption.trim().is_empty() {
        return Err(Error::Validation("input caption is empty".into()));
    }
    let payload = json!({
        "input_caption": input_caption,
        "fields": ["reasoning", "instruction", "output_caption", "element_count", "negative_input", "negative_output"],
    });
    let r: TripletResponse = complete_structured(llm, LlmTask::PromptTriplet, payload, policy, |r: &TripletResponse| {
        if r.instruction.trim().is_empty() || r.output_caption.trim().is_empty() {
            return Err(Error::Validation("instruction and output_caption must be non-empty".into()));
        }
        if r.element_count == 0 {
            return Err(Error::Validation("element_count must be >= 1".into()));
        }
        Ok(())
    })?;
    Ok(PromptTriplet {
        input_caption: input_caption.trim().to_string(),
        edit_instruction: r.instruction.trim().to_string(),
        output_caption: r.output_caption.trim().to_string(),
        element_count: r.element_count,
        negative_input: non_blank(r.negative_input),
        negative_output: non_blank(r.negative_output),
        source_dataset: source_dataset.to_string(),
    })
}

/// Splits triplets into `(kept, rejected)` by element count.
pub fn filter_by_elements(triplets: Vec<PromptTriplet>) -> (Vec<PromptTriplet>, Vec<PromptTriplet>) {
    triplets.into_iter().partition(|t| t.element_count <= MAX_ELEMENTS)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prompts::MockLlm;

    fn gen(c: &str) -> PromptTriplet {
        generate_prompt_triplet(c, "test", &MockLlm::new(), RetryPolicy::default()).unwrap()
    }

    #[test]
    fn removal_example() {
        let t = gen("A man speaks as birds chirp");
        assert_eq!(t.edit_instruction, "Remove the birds chirping");
        assert_eq!(t.output_caption, "A man speaks");
        assert_eq!(t.element_count, 2);
        assert_eq!(t.negative_input, None);
        assert_eq!(t.negative_output.as_deref(), Some("birds chirp"));
    }

    #[test]
    fn replacement_example() {
        let t = gen("A car accelerates");
        assert_eq!(t.output_caption, "A motorcycle accelerates");
        assert_eq!(t.negative_input.as_deref(), Some("motorcycle"));
        assert_eq!(t.negative_output.as_deref(), Some("car"));
    }

    #[test]
    fn unknown_captions_are_deterministic_and_valid() {
        let a = gen("Heavy rain falls on a metal roof while a dog barks");
        assert_eq!(a, gen("Heavy rain falls on a metal roof while a dog barks"));
        assert!(a.validate().is_ok());
    }

    #[test]
    fn persistent_garbage_is_a_client_error() {
        let r = generate_prompt_triplet("A cat meows", "t", &MockLlm::with_faults(10), RetryPolicy::default());
        assert!(matches!(r, Err(Error::Client(_))));
        assert!(generate_prompt_triplet("A cat meows", "t", &MockLlm::with_faults(3), RetryPolicy::default()).is_ok());
    }

    #[test]
    fn filter_threshold() {
        let mk = |n| PromptTriplet { element_count: n, ..gen("A cat meows") };
        let (kept, rejected) = filter_by_elements(vec![mk(1), mk(2), mk(3)]);
        assert_eq!(kept.iter().map(|t| t.element_count).collect::<Vec<_>>(), [1, 2]);
        assert_eq!(rejected.len(), 1);
    }
}
