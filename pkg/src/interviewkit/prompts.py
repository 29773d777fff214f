"""Prompt template registry.

Templates are versioned text assets; the gateway's request digest covers
the rendered prompt, so editing a template automatically invalidates any
cached or replayed transcript that used the old wording.

Slots are literal ``{name}`` tokens filled by plain string replacement,
which keeps the JSON braces inside the templates inert.
"""

from __future__ import annotations

from .records import DifficultyLevel, QaRecord, Question, QuestionKind

PROMPT_VERSION = "v1"


ENTITY_EXTRACTION = """Please identify and label the entities in the following multiple sentences, and return the entity labeling results for each sentence.
The results for each sentence should be independent, in JSON format, containing the sentence number, sentence text, and the list of recognized entities (including entity text, type, and position).
Return format is a dictionary, with only one key 'labeled_data', and the value is a list, each element is a dictionary containing the sentence text and the entity list.
{
    "labeled_data":
    [
        {"text":"Sentence 1", "entity_list": [{"entity_text": "", "entity_type": ""}]},
        {"text":"Sentence 2", "entity_list": [{"entity_text": "", "entity_type": ""}]},
        ...
    ]
}
Notice that "text" should be only the sentence, not the whole article.
Sentence list:
{sentences}"""


GENERATION = """As an interviewer, you are tasked with designing questions based on the provided texts. Your role involves crafting questions and correct answers that fulfill the following criteria:

1. **Focus on the Entity**: Ensure all questions consistently center around the specified entity from the article.
2. **Ensure Accuracy and Conciseness of Answers**: Verify that the provided answer is both correct for your designed question within the context and logic of the given text fragments, and ensure the answer is sufficiently concise—presented as a word or phrase, avoiding redundancy.
3. **Conform to difficulty requirements**: You need to design questions for the required difficulty levels, with specific requirements as follows:
{difficulty_rubric}

Here are examples:
{examples}

Now, given the following text fragments:
{context}

Based on the provided texts, please generate questions by following the requirements above and referencing the examples.
Output in the specified JSON format below:
{
    "generated_question":
    [
        {
            "question": "Generated Question",
            "answer": "Correct Answer of Generated Question"
        },
        ...
    ]
}"""


DIFFICULTY_RUBRICS = {
    DifficultyLevel.EASY: (
        "[easy]: **Encourage Knowledge Memorization**, design questions that assess "
        "whether respondents have memorized relevant knowledge. Create questions by "
        "directly extracting and blanking out content from the given passage."
    ),
    DifficultyLevel.MEDIUM: (
        "[medium]: **Encourage Knowledge Comprehension**: Design questions that prompt "
        "respondents to dissect and comprehend concepts involved in the topic. Avoid "
        "assessing only superficial knowledge retention."
    ),
    DifficultyLevel.HARD: (
        "[hard]: **Encourage Knowledge Deep Analysis**: Design questions that prompt "
        "respondents to engage in deep thinking and analysis. Avoid merely testing "
        "knowledge recall or conceptual comprehension; do not simply extract fragments "
        "from the given passage to create fill-in-the-blank items. Encourage respondents "
        "to focus on entities within the question and employ logical skills for complex "
        "reasoning."
    ),
}

DIFFICULTY_EXAMPLES = {
    DifficultyLevel.EASY: '"Which virus primarily causes HFMD?"',
    DifficultyLevel.MEDIUM: '"Which description is correct regarding meiosis II?"',
    DifficultyLevel.HARD: (
        '"A patient ingested a toxic substance... The doctor employed... '
        'which type of treatment is likely lacking?"'
    ),
}


EVALUATION = """The following is the performance of an LLM in answering a series of questions:

{qa_history}

Please evaluate and analyze the interviewee's performance based on the above performance using concise language from the following perspectives, and provide suggestions that help the LLM answer the same questions better. Suggestions should provide specific and detailed guidance on logical thinking steps, required knowledge, and abilities, ensuring the LLM can answer correctly for the same questions.
Output in the following JSON format:
{
    "flaws_knowledge": "The lack of background knowledge.",
    "flaws_capability": "The flaws in logic and capability.",
    "comprehensive_performance": "The Comprehensive performance of all questions.",
    "suggestions": "Suggestions that help the LLM answer questions better"
}"""


QUERY_WITH_SUGGESTIONS = """Please complete the following question:
[question]: {question}

In your previous responses to these questions, the interviewer has provided the following suggestions for you to help you answer better:
[suggestions]: {suggestions}

Please consider the above [suggestions], and answer the above [question], in the following JSON format:
{"answer": "Your answer"}"""


QUERY_PLAIN = """Please complete the following question:
[question]: {question}

Please answer the above [question], in the following JSON format:
{"answer": "Your answer"}"""


JUDGE = """Decide whether a given answer to a question matches the reference answer in meaning.
[question]: {question}
[reference answer]: {reference}
[given answer]: {given}

Respond in the following JSON format:
{"correct": true}"""


def fill(template: str, **slots: str) -> str:
    rendered = template
    for name, value in slots.items():
        rendered = rendered.replace("{" + name + "}", value)
    return rendered


def render_question_block(question: Question, with_background: bool = True) -> str:
    """The question as shown to the target model."""
    parts = []
    if with_background and question.background:
        parts.append(question.background)
        parts.append("")
    parts.append(question.text)
    if question.kind is QuestionKind.MULTIPLE_CHOICE:
        parts.append("Options:")
        parts.extend(f"{opt.label}. {opt.text}" for opt in question.options)
    return "\n".join(parts)


def render_query(
    question: Question, suggestions: str | None = None, with_background: bool = True
) -> str:
    block = render_question_block(question, with_background=with_background)
    if suggestions is None:
        return fill(QUERY_PLAIN, question=block)
    return fill(QUERY_WITH_SUGGESTIONS, question=block, suggestions=suggestions)


def render_entity_extraction(sentences: list[str]) -> str:
    listing = "\n".join(f"{i + 1}. {s}" for i, s in enumerate(sentences))
    return fill(ENTITY_EXTRACTION, sentences=listing)


def render_generation(context: str, difficulty: DifficultyLevel) -> str:
    return fill(
        GENERATION,
        difficulty_rubric=DIFFICULTY_RUBRICS[difficulty],
        examples=f"[{difficulty.label}] {DIFFICULTY_EXAMPLES[difficulty]}",
        context=context,
    )


def render_evaluation(records: list[QaRecord]) -> str:
    blocks = []
    for i, record in enumerate(records, start=1):
        blocks.append(
            "\n".join(
                [
                    f"Question {i}: {record.question.text}",
                    f"Correct Answer: {record.question.gold_answer}",
                    f"LLM's Answer: {record.model_answer}",
                ]
            )
        )
    return fill(EVALUATION, qa_history="\n\n".join(blocks))


def render_judge(question: Question, given: str) -> str:
    return fill(JUDGE, question=question.text, reference=question.gold_answer, given=given)
