//! The closed catalog of dialogue acts a nugget may be labeled with.

use serde::Serialize;

/// One entry of the dialogue-act catalog.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct DialogueAct {
    /// Stable snake_case key used in annotation files.
    pub id: &'static str,
    pub display_name: &'static str,
    /// Canonical example utterance for the act.
    pub example: &'static str,
}

const fn act(id: &'static str, display_name: &'static str, example: &'static str) -> DialogueAct {
    DialogueAct { id, display_name, example }
}

static CATALOG: [DialogueAct; 24] = [
    act("agreement", "Agreement", "I agree"),
    act("disagreement", "Disagreement", "I disagree"),
    act("yes_answer", "Yes Answer", "Yes, you are correct"),
    act("no_answer", "No Answer", "No, that is wrong"),
    act("opening", "Opening", "Hello"),
    act("closing", "Closing", "It was nice talking with you."),
    act("apology", "Apology", "I am sorry"),
    act("thanking", "Thanking", "Thank you"),
    act("rejection", "Rejection", "I cannot provide an answer."),
    act("applause", "Applause", "Well done."),
    act("declarative_question", "Declarative Question", "What do you mean by ...?"),
    act("confusion", "Confusion", "I don't understand"),
    act("reasoning", "Reasoning", "This is because ..."),
    act("downplayer", "Downplayer", "That's all right."),
    act("assumption", "Assumption", "I assume you meant ..."),
    act("acknowledgment", "Acknowledgment", "Ok."),
    act("clarification", "Clarification", "The pdf you provided me is ...."),
    act("non_declarative_question", "Non-Declarative Question", "Isn't it exciting?"),
    act("user_instruction", "User instruction", "Please click on ...."),
    act("recommendation", "Recommendation", "I would recommend...."),
    act("citation", "Citation", "According to ..."),
    act("example", "Example", "For example, ..."),
    act("commissive", "Commissive", "I am happy to help ..."),
    act("opinion", "Opinion", "I think ..."),
];

/// All dialogue acts, in catalog order.
pub fn act_catalog() -> &'static [DialogueAct] {
    &CATALOG
}

pub fn act_by_id(id: &str) -> Option<&'static DialogueAct> {
    CATALOG.iter().find(|a| a.id == id)
}

pub fn is_known_act(id: &str) -> bool {
    act_by_id(id).is_some()
}
