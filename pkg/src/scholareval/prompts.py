"""Prompt templates for every pipeline stage.

Template text is part of the system's behavioral contract: downstream parsing
and the output-format tests depend on the exact block formats requested here.
"""

from .gateway import OutputShape, PromptTemplate

METHOD_EXTRACTION = PromptTemplate(
    name="method_extraction",
    output_shape=OutputShape.PYTHON_LIST_BLOCK,
    text="""\
You are an expert research assistant. You are skilled at reading research ideas \
and identifying the methods that are being proposed to solve the research \
problem. Methods can be planned system designs, experiments, human studies, \
analyses, ablations, etc.

Given a research idea, you should extract all methods as a Python list, such \
that each method is a separate item in the list. Each item should be a \
word-for-word copy of a method, along with a short synthesis that grounds the \
method in the context of the overall research idea. The extracted methods \
should be interpretable on their own.

Ensure that the methods you extract address different aspects of the research \
idea and are non-redundant.

The method list you return should be ranked by importance to the research \
idea, with the most important methods first.

[start research idea]
{research_idea}
[end research idea]

Please output a parseable Python block as follows:

```python
plans = ["context + method", ...]
```
""",
)

SNIPPET_QUERY = PromptTemplate(
    name="snippet_query",
    output_shape=OutputShape.JSON_BLOCK,
    text="""\
You are an expert research assistant. Given a method (i.e., one approach that \
researchers are adopting to execute their idea) extracted from a research \
idea, please construct a singular query that will be used to search for paper \
snippets using a scholarly search API.

Use JSON format with 70 words or less per query. Do not include any text in \
the query besides the query itself. Do not include text like "semantic search \
query about ..." or "papers related to ...". Just the actual query text. No \
operators such as AND, OR should be used. Just a query in natural language \
that is relevant to the method.

[start extracted method]
{method}
[end extracted method]

In case the method does not have enough context to construct an effective \
snippet search query, you can use the research idea to understand the overall \
research direction and inject useful context.

[start research idea]
{research_idea}
[end research idea]

Please output a parseable JSON block as follows, being especially careful to \
use the correct number of escape characters:

```json
{
    "query": "Your search query here (IN 70 WORDS OR LESS)"
}
```
""",
)

EVIDENCE_SUMMARY = PromptTemplate(
    name="evidence_summary",
    output_shape=OutputShape.JSON_BLOCK,
    text="""\
You are an expert research assistant knowledgeable in many domains. You are \
extremely critical and observant, and do not overgeneralize findings. You are \
given a proposed research method and the methods/results section from a paper.

[start paper]
{paper_text}
[end paper]

[start proposed research method]
{method}
[end proposed research method]

To further understand the scope of the proposed research method, here is the \
entire research idea that it is extracted from - a method is a single \
approach that researchers are adopting to execute their research idea:

[start research idea]
{research_idea}
[end research idea]

For any method in the paper that is related to the proposed research method \
and the overall research idea, please summarize the method used in the paper, \
report the experimental outcome from using the method, and provide some \
context for experimental conditions.

Do not use any in-text citations. Ensure that the method, results, and \
context you provide are specific and detailed, and that they mention how it \
relates to the proposed method and research idea.

If the proposed research method does not relate to any methods in the paper, \
please return an empty dictionary.

Strictly follow the output format displayed below.

JSON formatting requirements:
- Must be a complete, valid JSON object
- Start with an open bracket and end with closed bracket
- No trailing commas after the last property
- Validate JSON structure before output

```json
{
    "method": "Description of experimental approach including: algorithm/technique, datasets/inputs, computational resources, implementation/experimentation details, evaluation setup, and metrics/instruments used, etc.",
    "results": "Quantitative outcomes with specific values, comparisons to baselines, statistical significance where applicable",
    "context": "Key experimental conditions: dataset/population size, hardware/system/instrument specs, hyperparameters, or other domain-specific constraints that affect reproducibility"
}
```
""",
)

SOUNDNESS_SYNTHESIS = PromptTemplate(
    name="soundness_synthesis",
    output_shape=OutputShape.JSON_BLOCK,
    text="""\
You are an expert research assistant knowledgeable in many domains. You are \
extremely critical and observant, and do not overgeneralize findings.

You are given a proposed research method and a list of related work.

Your objective is to create a meta-review of the related work in the context \
of the proposed research method. Point out any evidence that supports or \
contradicts the proposed method. Make sure to contrast the related work as a \
series of iterative scientific work, where newer work can provide evidence \
that supports or contradicts older work.

It is important that the meta-review you generate always ties back to the \
original research idea. Judge the support and contradictions as well as \
suggested actions for each method within the general context of the research \
idea to ensure that your review is highly relevant and precise.

Be granular, making sure to reference specific details such as:
- algorithm/technique, datasets/inputs/population, computational resources, statistical methods, implementation details, evaluation setup, and metrics/instruments used, etc.
- quantitative outcomes, comparisons to baselines, statistical significance
- dataset/population size, hardware/system specs, hyperparameters, or other domain-specific constraints that affect reproducibility

It is important that for each method-level meta-review that you generate, \
your review of the support and contradictions should be ordered starting from \
strongest evidence of support/contradiction to the weakest. Likewise, the \
suggested actions should be ordered from most important to least important. \
This does not mean that you will generate these as bullet points, but rather \
detailed, coherent paragraphs that are logically ordered.

It is required to copy the in-text citations with their links in Markdown \
format [(author, YYYY-MM)](link) when referring to related work.
{sparsity_note}
Related Work:
{related_work}

[start proposed research method]
{method}
[end proposed research method]

[start research idea]
{research_idea}
[end research idea]

Output format:
Please output a parseable JSON block as follows:

```json
{
    "support": "evidence that supports the proposed method",
    "contradictions": "evidence that contradicts the proposed method",
    "suggested_action": "how can the proposed method be improved based on the related work",
    "soundness_score": "int score 0 to 10 based on the evidence for and against the proposed method"
}
```
""",
)

# Appended to the synthesis prompt when fewer than two relevant summaries
# survive; the section must flag sparse evidence instead of fabricating it.
SPARSE_EVIDENCE_NOTE = (
    "\nNote: very little relevant literature was retrieved for this method. "
    "Explicitly state that the literature evidence is sparse; do not fabricate "
    "support or contradictions beyond the related work provided.\n"
)

TLDR_SUMMARY = PromptTemplate(
    name="tldr_summary",
    output_shape=OutputShape.JSON_BLOCK,
    text="""\
You are an expert research assistant. You are given the method-level soundness \
reviews of a research idea. Generate a TL;DR summary highlighting the top \
three most important strengths, the top three most important weaknesses, and \
the top three most important suggestions to address across all methods. Fewer \
than three items per category is acceptable when the reviews support fewer.

[start method-level reviews]
{reviews}
[end method-level reviews]

Please output a parseable JSON block as follows:

```json
{
    "strengths": ["...", "...", "..."],
    "weaknesses": ["...", "...", "..."],
    "suggestions": ["...", "...", "..."]
}
```
""",
)

DIMENSION_EXTRACTION = PromptTemplate(
    name="dimension_extraction",
    output_shape=OutputShape.JSON_BLOCK,
    text="""\
You are a helpful assistant that reads scientific research ideas and extracts \
a structured summary of their contributions.

Your task is to identify a small number of high-level contribution \
dimensions, and for each dimension, extract one or more specific contribution \
statements that are faithful to the research idea.

Contribution dimensions should represent general categories of scientific \
contribution that are meaningful and comparable across research ideas, \
regardless of the field. These might include:
- methodology (e.g., proposing a new method, model, or procedure)
- application (e.g., applying existing methods to a new problem or domain)
- theoretical contribution (e.g., proving a new result, deriving a new model)
- data (e.g., constructing a new dataset, conducting original measurements or surveys)
- evaluation (e.g., designing an experimental protocol, benchmarking a technique)
- tool or system design (e.g., building software, devices, or infrastructure to support research)
- conceptual framework (e.g., introducing a new taxonomy or way of thinking about a problem)

Do not limit your output to the examples above but rather generate suitable \
dimensions for the research idea given to you. Only include dimensions that \
are actually reflected in the research idea - do not add generic or \
speculative categories.

For each dimension, write one or more contribution statements that clearly \
explain what the research is proposing. These statements should be precise, \
self-contained, and informative - make sure they include enough context as \
they will be used as the basis to generate search queries later on.

Each dimension may include multiple contribution statements, but do not \
repeat the same idea across dimensions. Avoid redundancy, and keep the \
summary compact and informative.

[start research idea]
{research_idea}
[end research idea]

Please output a parseable JSON block as follows:

```json
{
  "<dimension_name_1>": [
    "<contribution_statement_1>",
    "<contribution_statement_2>"
  ],
  "<dimension_name_2>": [
    "<contribution_statement_3>"
  ]
}
```
""",
)

CONTRIBUTION_QUERIES = PromptTemplate(
    name="contribution_queries",
    output_shape=OutputShape.JSON_BLOCK,
    text="""\
You are an expert at writing highly targeted search queries for retrieving \
academic papers from a scholarly search API.

You will be given a full research idea and one specific contribution from \
that idea.

Your task is to generate up to {n_queries} short, diverse, and high-quality \
search queries that are focused on the given contribution and consistent with \
the overall research context.

These queries will be used to search for paper abstracts. They must be \
semantically rich and optimized to retrieve papers that are directly relevant \
to the contribution.

Avoid generating queries that are too general, overly broad, or likely to \
return unrelated results. Also avoid generating queries that are just broadly \
related to the research idea but not specifically tailored to the \
contribution.

Guidelines:
- Each query should be brief and focused (as if typed into a search bar; as a rule of thumb do not exceed 7 words per query).
- Queries must stay tightly aligned with the core idea of the contribution.
- Incorporate key methods, problems, domains, or goals described in the contribution.
- Reflect an understanding of the broader research idea, but do not drift away from the specific contribution.
- Use natural phrasing (no Boolean operators like AND, OR, etc.).
- Ensure queries are meaningfully different from one another while remaining on-topic.

[start contribution]
{contribution}
[end contribution]

[start research idea]
{research_idea}
[end research idea]

Please output a parseable JSON block as follows:

```json
{
  "queries": ["query one", "query two"]
}
```
""",
)

RELEVANCE_ASSESSMENT = PromptTemplate(
    name="relevance_assessment",
    output_shape=OutputShape.JSON_BLOCK,
    text="""\
You are an expert at evaluating whether a paper should be considered relevant \
for assessing the scientific contribution of a research idea.

You will be given a research idea and a paper abstract retrieved from a \
scholarly search API. Your task is to thoroughly understand the scientific \
contributions of each of the research idea and the paper, and to output a \
score from 0 to 5 indicating how similar the contributions of the paper are \
to those of the research idea.

Scoring Rubric:

Score 5 - Highly Similar Contributions:
- The paper addresses the exact same research question or hypothesis as the idea
- Uses identical or very similar methodological approaches
- Targets the same specific population, system, or domain
- Would directly compete with or overlap significantly with the proposed research
- The paper's findings would substantially impact the novelty of the proposed work

Score 4 - Very Similar Contributions:
- The paper addresses a closely related research question with significant overlap
- Uses similar methodological approaches with minor variations
- Targets a very similar population, system, or domain
- Shares most key variables, measurements, or outcomes of interest
- The paper's contributions would moderately impact the proposed research's novelty

Score 3 - Moderately Similar Contributions:
- The paper addresses a related research question within the same broad area
- Uses some similar methods or approaches but with notable differences
- Targets a related but distinct population, system, or domain
- Shares some key concepts, variables, or theoretical frameworks
- The paper provides useful context but doesn't directly threaten novelty

Score 2 - Somewhat Similar Contributions:
- The paper is in the same general field or discipline
- Uses different methods but addresses conceptually related problems
- Limited overlap in specific research focus or target populations
- Shares broad theoretical background but differs in specific contributions
- The paper is peripherally relevant for background or context

Score 1 - Minimally Similar Contributions:
- The paper is tangentially related to the research area
- Very limited overlap in methods, populations, or specific research questions
- May share some terminology or broad field classification
- Provides minimal insight relevant to the proposed research
- Connection is primarily at the disciplinary level

Score 0 - No Similar Contributions:
- The paper addresses completely different research questions
- No meaningful overlap in methods, populations, or domains
- Different field or discipline entirely
- No relevant insights for the proposed research
- No discernible connection between the contributions

[start research idea]
{research_idea}
[end research idea]

[start paper abstract]
{abstract}
[end paper abstract]

Respond with a JSON object containing two fields rationale and score.
Please output a parseable JSON block as follows:

```json
{
  "rationale": "<your detailed reasoning for the score>",
  "score": <an integer from 0 to 5 based on the rubric>
}
```
""",
)

PAIRWISE_COMPARISON = PromptTemplate(
    name="pairwise_comparison",
    output_shape=OutputShape.JSON_BLOCK,
    text="""\
You are an expert in assessing the novelty of scientific research ideas \
relative to existing work.

Your job is to compare a full research idea to a paper abstract based on \
novelty and originality.

You will be given a research idea, a paper abstract, and a comma-separated \
list of contribution dimensions.

Produce a structured output consisting of:

1. overall_comparison: a broad yet precise summary of the novelty of the \
research idea versus the paper, i.e., whether the idea proposes \
ideas/angles/uses that appear original relative to what the abstract claims; \
identify overlap vs. originality explicitly.
2. dimension_comparisons: for each provided dimension, a novelty comparison \
that states whether the idea is doing something not present in the paper for \
that dimension (or vice versa), and a numeric score:
- 1 = The research idea is more novel under this dimension (adds ideas/angles/uses not present in the paper abstract)
- 0 = Neither appears more novel or the paper does not address this dimension (tie/insufficient evidence)
- -1 = The paper appears more novel or the idea largely replicates what the paper already presents under this dimension

[start research idea]
{research_idea}
[end research idea]

[start paper abstract]
{abstract}
[end paper abstract]

Contribution dimensions: {dimensions}

Return your output as a parseable JSON block with exactly this structure:

```json
{
  "overall_comparison": "<novelty-focused summary>",
  "dimension_comparisons": {
    "<dimension_1>": {
      "comparison": "<comparison for this dimension>",
      "score": <1 | 0 | -1>
    },
    "<dimension_2>": {
      "comparison": "<comparison>",
      "score": <1 | 0 | -1>
    }
  }
}
```
""",
)

CONTRIBUTION_SYNTHESIS = PromptTemplate(
    name="contribution_synthesis",
    output_shape=OutputShape.JSON_BLOCK,
    text="""\
You are reviewing a research idea for novelty and originality of its \
contributions and their impact.

You are critical, knowledgeable, precise, and not afraid to give truthful \
assessments of the idea's novelty. Do not discuss methodology soundness, \
feasibility, correctness, or experimental quality - those are out of scope \
here.

You will be given a full research idea and the pairwise comparisons between \
the idea and existing papers for one contribution dimension. Each comparison \
includes a paper reference (citation key and URL), an overall novelty \
comparison, and a dimension-level comparison with a score.

Your task is to synthesize an evaluation of the idea's novelty and impact \
along this dimension based on all pairwise comparisons, composed of three \
subsections:

- strengths: Precisely explain where the idea is novel under this dimension versus the papers and makes an impact; back claims with in-text citations.
- weaknesses: Precisely explain where the idea lacks novelty or is already covered by prior work, and hence lacks impact; back claims with in-text citations. Be exhaustive with identifying weaknesses.
- suggestions: Give actionable, feasible, and useful suggestions to improve the novelty and impact of the work, if needed, based on the evidence from the strengths and weaknesses; back claims with in-text citations.

Use in-text citations with links in Markdown format [(author, YYYY-MM)](link).

[start research idea]
{research_idea}
[end research idea]

Dimension under review: {dimension}

[start pairwise comparisons]
{comparisons}
[end pairwise comparisons]

Please output a parseable JSON block as follows:

```json
{
  "strengths": "<novelty strengths with citations>",
  "weaknesses": "<novelty weaknesses with citations>",
  "suggestions": "<actionable suggestions with citations>"
}
```
""",
)

CITATION_AUDIT = PromptTemplate(
    name="citation_audit",
    output_shape=OutputShape.JSON_BLOCK,
    text="""\
You are a meticulous scientific editor. You are given one section of a \
research idea evaluation and the list of citable papers for this evaluation. \
Ensure that all citation-worthy statements are followed by relevant \
citations, using only papers from the provided list, in Markdown format \
[(author, YYYY-MM)](link). Do not add, remove, or change any claims; only \
citation markers may be inserted or fixed. If every citation-worthy statement \
is already cited, return the text unchanged.

[start citable papers]
{citable_papers}
[end citable papers]

[start section]
{section_text}
[end section]

Please output a parseable JSON block as follows:

```json
{
  "text": "<the section text with citations ensured>"
}
```
""",
)

COVERAGE_JUDGE = PromptTemplate(
    name="coverage_judge",
    output_shape=OutputShape.JSON_BLOCK,
    text="""\
You are given a single essential statement from a research idea review \
targeting the technical soundness and scientific contribution of a research \
idea. This statement was extracted from actual human reviews about the \
research idea and will be used as your ground-truth reference. Additionally, \
you will be given a research idea review that aims to give a detailed \
evaluation of the same research idea. The review given to you will typically \
be long and composed of multiple sections and references to related papers. \
Your job is to verify that the given review has a mention of the reference \
statement in its content. These references can be paraphrased or articulated \
differently, but they should express the same meaning as the reference \
statement. Does the given review express the reference statement?

Score 1: The given review does not mention the reference statement at all
Score 2: The given review mentions some related concepts but does not express the core meaning of the reference statement
Score 3: The given review partially expresses the reference statement but misses key aspects or nuances
Score 4: The given review expresses most aspects of the reference statement with minor omissions or slight differences in emphasis
Score 5: The given review clearly expresses the reference statement, capturing its core meaning and implications

[start reference statement]
{rubric_statement}
[end reference statement]

[start review]
{review}
[end review]

Please output a parseable JSON block as follows:

```json
{
  "rationale": "<your reasoning>",
  "score": <an integer from 1 to 5>
}
```
""",
)

REPORT_JUDGE = PromptTemplate(
    name="report_judge",
    output_shape=OutputShape.JSON_BLOCK,
    text="""\
You are an expert scientific reviewer. You will be given two research \
evaluation reports (Report A and Report B) and you must answer which one is \
better based on the following criteria:

Evidence support:
An evidence-supported report is one that grounds its claims in the literature \
and backs them with relevant citations that improve traceability and its \
overall trustworthiness and reliability. Which report has more evidence \
support?

Actionability:
Actionability is the extent to which the report offers varied, clear, and \
actionable suggestions that are likely to improve the research idea. Which \
report is more actionable?

Depth:
Depth is measured by the degree of engagement with the point being evaluated \
and the literature cited. A deep report discusses each point from multiple \
angles and references specific details about the literature it cites, rather \
than relying on generic statements followed by citations. Which response has \
greater depth?

You must choose either A, B, or Tie (when both responses are equivalent). \
Read both responses thoroughly before judging, and give thorough rationales \
that show that you are a fair and unbiased judge. If you choose that one \
response is better, clearly rationalize why. If they are equivalent, then you \
should choose Tie.

Report A: {report_a}

Report B: {report_b}

Judge the responses based on the criteria, while respecting the output format \
below:

```json
{
  "Evidence-support-rationale": "...",
  "Evidence-support-winner": "<A, B, or Tie>",
  "Actionability-rationale": "...",
  "Actionability-winner": "<A, B, or Tie>",
  "Depth-rationale": "...",
  "Depth-winner": "<A, B, or Tie>"
}
```
""",
)

ALL_TEMPLATES = {
    template.name: template
    for template in (
        METHOD_EXTRACTION,
        SNIPPET_QUERY,
        EVIDENCE_SUMMARY,
        SOUNDNESS_SYNTHESIS,
        TLDR_SUMMARY,
        DIMENSION_EXTRACTION,
        CONTRIBUTION_QUERIES,
        RELEVANCE_ASSESSMENT,
        PAIRWISE_COMPARISON,
        CONTRIBUTION_SYNTHESIS,
        CITATION_AUDIT,
        COVERAGE_JUDGE,
        REPORT_JUDGE,
    )
}
