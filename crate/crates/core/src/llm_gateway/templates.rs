//! Zero-shot prompt templates for the four model tasks. Each follows the
//! same structure: task description, criteria, input, response format.

use super::{PromptTemplate, Strategy, Task};

pub const TEMPLATE_VERSION: &str = "zs-1";

const IDENTIFY: &str = "\
You are analyzing a bug report for a mobile application.

Task: decide which of the numbered sentences below describe steps to \
reproduce the bug (S2Rs). An S2R describes a concrete user action performed \
on the app, such as tapping a button, entering text, swiping, or opening \
the app.

Criteria:
- Sentences describing the observed buggy behavior or the expected correct \
behavior are NOT S2Rs.
- Sentences about the environment (device, version) are NOT S2Rs.
- A sentence that mixes a user action with other content still counts as an \
S2R.

Sentences:
{sentences}

Response format: a single bracketed list of the matching sentence numbers, \
for example [0, 2, 5]. Respond with [] when no sentence qualifies. Do not \
add any other text.";

const EXTRACT: &str = "\
You are analyzing the steps to reproduce (S2Rs) in a bug report for a \
mobile application.

Task: from each numbered sentence below, extract every individual S2R, \
where an individual S2R is a phrase describing one atomic interaction with \
the app.

Criteria:
- Use the format [action][object] or [action][object][preposition][object2]: \
the action is the interaction verb, the object is the GUI component acted \
on, and object2 qualifies the object via the preposition.
- A sentence may contain several interactions; emit one line per \
interaction, in the order they appear left to right.
- If several sentences describe the same interaction, emit it only once, at \
its first occurrence.
- Exclude observed-behavior and expected-behavior content.

Sentences:
{sentences}

Response format: one line per individual S2R, as \
`<sentence number>: [action][object][preposition][object2]` (the last two \
slots only when present). Do not add any other text.";

const MAP_GATE: &str = "\
You are matching a bug report step to the GUI of a mobile application.

Task: decide whether the individual S2R below corresponds to any of the \
outgoing interactions available on the current screen.

Criteria:
- An interaction corresponds when its GUI component and action plausibly \
match what the step describes.
- Answer for this screen only; do not consider other screens.

Current screen: {screen}
Individual S2R: {s2r}
Outgoing interactions:
{interactions}

Response format: answer with the single word yes or no.";

const MAP_LIST: &str = "\
You are matching a bug report step to the GUI of a mobile application.

Task: list the outgoing interactions on the current screen that correspond \
to the individual S2R below.

Criteria:
- An interaction corresponds when its GUI component and action plausibly \
match what the step describes.
- Include every corresponding interaction, and nothing else.

Current screen: {screen}
Individual S2R: {s2r}
Outgoing interactions:
{interactions}

Response format: a single bracketed list of the matching interaction \
numbers, for example [1, 3]. Do not add any other text.";

/// The shipped zero-shot templates, one per task.
#[derive(Debug, Clone)]
pub struct TemplateSet {
    pub identify: PromptTemplate,
    pub extract: PromptTemplate,
    pub map_gate: PromptTemplate,
    pub map_list: PromptTemplate,
}

impl TemplateSet {
    pub fn zero_shot() -> TemplateSet {
        let make = |task, text: &str| PromptTemplate {
            task,
            strategy: Strategy::ZeroShot,
            template_text: text.to_string(),
            version: TEMPLATE_VERSION.to_string(),
        };
        TemplateSet {
            identify: make(Task::Identify, IDENTIFY),
            extract: make(Task::Extract, EXTRACT),
            map_gate: make(Task::MapGate, MAP_GATE),
            map_list: make(Task::MapList, MAP_LIST),
        }
    }
}

impl Default for TemplateSet {
    fn default() -> Self {
        TemplateSet::zero_shot()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_templates_are_zero_shot_and_versioned() {
        let set = TemplateSet::zero_shot();
        for t in [&set.identify, &set.extract, &set.map_gate, &set.map_list] {
            assert_eq!(t.strategy, Strategy::ZeroShot);
            assert_eq!(t.version, TEMPLATE_VERSION);
        }
    }

    #[test]
    fn mapping_templates_share_placeholders() {
        let set = TemplateSet::zero_shot();
        for t in [&set.map_gate, &set.map_list] {
            for placeholder in ["{screen}", "{s2r}", "{interactions}"] {
                assert!(t.template_text.contains(placeholder));
            }
        }
        assert!(set.identify.template_text.contains("{sentences}"));
        assert!(set.extract.template_text.contains("{sentences}"));
    }
}
