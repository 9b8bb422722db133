//! Built-in prompt catalogs used when a configuration does not supply its own.

/// Layer-1 seed prompts for emotion-conditioned text generation.
pub const SEED_PROMPTS: [&str; 10] = [
    "Describe a situation where a person felt <em>",
    "Write a text that expresses <em>",
    "Phrases that express <em>",
    "What is a sentence example for <em> ?",
    "Can you provide an example of a situation where someone experienced <em>?",
    "What is an example of a <em> sentence?",
    "<em> sentence",
    "Experience for <em>?",
    "Please describe a situation or event — in as much detail as possible — in which a reader felt <em>",
    "Please complete the sentence: I felt <em> when/because",
];

/// Layer-2 paraphrase (mutation) prompts.
pub const PARAPHRASE_PROMPTS: [&str; 10] = [
    "Paraphrase the following sentence into a new sentence: \"SENTENCE_1\"",
    "Given the following sentence: \"SENTENCE_1\" Paraphrase the sentence into a new one by keeping the same meaning.",
    "Please paraphrase the following sentence in a clear and concise manner: \"SENTENCE_1\"",
    "Rewrite \"SENTENCE_1\" in a more formal (or informal) tone while retaining the original meaning.",
    "Simplify \"SENTENCE_1\" for a younger audience without changing its meaning.",
    "Expand \"SENTENCE_1\" into a more detailed explanation without altering its original intent.",
    "Creatively rewrite \"SENTENCE_1\", ensuring the new version is engaging yet maintains the same message.",
    "Summarize \"SENTENCE_1\" in fewer words, ensuring the main idea is fully intact",
    "Rewrite \"SENTENCE_1\" from a different perspective (e.g., first person to third person), keeping the essence the same.",
    "Can you simplify this sentence to make it easier to understand? \"SENTENCE_1\"",
];

/// Layer-3 fixed prompts. Never optimized; they only rewrite Layer-2 prompts.
pub const FIXED_PROMPTS: [&str; 6] = [
    "Reorganize the sentence to convey the same meaning: \"SENTENCE_1\"",
    "Transform the sentence to a different voice or perspective: \"SENTENCE_1\"",
    "Paraphrase the following sentence: \"SENTENCE_1\"",
    "Rewrite the sentence using different words: \"SENTENCE_1\"",
    "Paraphrase the sentence with a more casual tone: \"SENTENCE_1\"",
    "Rephrase the sentence by changing the form of the words: \"SENTENCE_1\"",
];

/// Layer-2 combine (crossover) prompts.
pub const COMBINE_PROMPTS: [&str; 14] = [
    "The following two sentences are prompts for conditional text generation. \"SENTENCE_1\"\"SENTENCE_2\" Summarize both prompts into one.",
    "Mix the two prompts: \"SENTENCE_1\" \"SENTENCE_2\" Into a new single sentence.",
    "Combine \"SENTENCE_1\" and \"SENTENCE_2\" to create a new, cohesive sentence that retains elements from both.",
    "Merge the themes of \"SENTENCE_1\" and \"SENTENCE_2\" into a single sentence that seamlessly integrates their ideas.",
    "Craft a new sentence by blending the key elements of \"SENTENCE_1\" and \"SENTENCE_2\", ensuring that the final sentence is coherent and flows naturally.",
    "Formulate a new sentence that synthesizes the concepts from \"SENTENCE_1\" and \"SENTENCE_2\", maintaining a balance between the two.",
    "Create a cohesive and fluent sentence that intertwines the essence of both \"SENTENCE_1\" and \"SENTENCE_2\".",
    "Read \"SENTENCE_1\" and \"SENTENCE_2\". Then, synthesize their main ideas or themes into a new, single sentence. Ensure that the new sentence reflects elements from both original sentences in a balanced and coherent way.",
    "Analyze the content and tone of \"SENTENCE_1\" and \"SENTENCE_2\". Use this analysis to construct a new sentence that merges the essence of both, maintaining the style and tone present in the original sentences.",
    "Identify the key elements or messages in \"SENTENCE_1\" and \"SENTENCE_2\". Create a new sentence that weaves these elements together, ensuring the resulting sentence is harmonious and fluid, and preserves the intent of both original sentences.",
    "Examine \"SENTENCE_1\" and \"SENTENCE_2\" for their unique characteristics. Then, blend these characteristics to produce a new sentence that seamlessly combines the distinct qualities of both into a unified, coherent statement.",
    "Consider the context and underlying themes in \"SENTENCE_1\" and \"SENTENCE_2\". Use this insight to generate a new sentence that encapsulates the themes or messages from both in a cohesive and eloquent manner.",
    "Interpret the imagery or concepts presented in \"SENTENCE_1\" and \"SENTENCE_2\". Develop a new sentence that intertwines these images or concepts, ensuring the new sentence is clear, concise, and effectively communicates the blended ideas.",
    "Reflect on the narrative or descriptive elements in \"SENTENCE_1\" and \"SENTENCE_2\". Fuse these elements into a new sentence that tells a story or paints a picture, combining the narratives or descriptions from both original sentences.",
];

pub fn owned(prompts: &[&str]) -> Vec<String> {
    prompts.iter().map(|s| s.to_string()).collect()
}
