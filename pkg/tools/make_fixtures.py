#!/usr/bin/env python3
"""Regenerate the bundled corpus fixtures.

Runs the real pipeline in record mode against scripted model responses
(the answers and judge scores reported for each case study) and writes
``fixtures.jsonl`` plus ``expected.json`` for every corpus entry.  Rerun
after any change that affects prompt text; the digests depend on it.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO / "src"))

from prednamer import pipeline  # noqa: E402
from prednamer.corpus import CORPUS_NAMES, load_entry  # noqa: E402
from prednamer.gateway import FixtureStore, Gateway, ScriptedTransport  # noqa: E402

CORPUS_DIR = REPO / "src" / "prednamer" / "corpus"


def judge_block(sections: dict[str, list[tuple[str, str]]]) -> str:
    lines = []
    for placeholder, scored in sections.items():
        lines.append(f"{placeholder}:")
        for name, score in scored:
            lines.append(f"- {name}: {score}")
    return "\n".join(lines)


LLAMA_FAMILY_PROSE = (
    "Looking at the rules, I would name h0 'parent' since mother and father "
    "both imply it. For h1, the relation skips a generation, so I would call "
    "it 'ancestor'. For h2 a fitting name is 'great_ancestor'. The sister and "
    "brother cases mean h3 should be 'sibling'. Finally h4 relates children "
    "of siblings, so I suggest 'full_sibling'."
)

FAMILY_SCRIPT = {
    "chatgpt-4o": {
        "suggest": [
            "h0: parent\nh1: grandparent\nh2: common_ancestor\nh3: sibling\nh4: cousin",
            "h0: parent\nh1: grandparent\nh2: commonAncestor\nh3: sibling\nh4: cousin",
            "h0: parent\nh1: grandparent\nh2: common-ancestor\nh3: sibling\nh4: cousin",
        ],
        "choose": "h0: parent\nh1: grandparent\nh2: commonAncestor\nh3: sibling\nh4: cousin",
        "judge": judge_block({
            "h0": [("parent", "1"), ("ancestor", "0.5")],
            "h1": [("grandparent", "1"), ("ancestor", "0.5")],
            "h2": [("commonAncestor", "1"), ("ancestor", "0.5"), ("greatAncestor", "0.5")],
            "h3": [("sibling", "1"), ("sister", "0.5")],
            "h4": [("cousin", "1"), ("cousins", "1"), ("halfSibling", "0"),
                   ("fullSibling", "0"), ("h3", "0")],
        }),
    },
    "chatgpt-o3mini": {
        "suggest": [
            "h0: parent/2\nh1: grandparent/2\nh2: common_ancestor/3\nh3: sibling/2\nh4: cousin/2",
            "h0: parent\nh1: grandparent\nh2: common_ancestor\nh3: sibling\nh4: cousin",
            "h0: parent\nh1: grandparent\nh2: common_ancestor\nh3: sibling\nh4: cousin",
        ],
        "choose": "h0: parent\nh1: grandparent\nh2: common_ancestor\nh3: sibling\nh4: cousin",
        "judge": judge_block({
            "h0": [("parent", "1"), ("ancestor", "0")],
            "h1": [("grandparent", "1"), ("ancestor", "0.5")],
            "h2": [("commonAncestor", "1"), ("ancestor", "0.5"), ("greatAncestor", "0")],
            "h3": [("sibling", "1"), ("sister", "0")],
            "h4": [("cousin", "1"), ("cousins", "1"), ("halfSibling", "0"),
                   ("fullSibling", "0"), ("h3", "0")],
        }),
    },
    "llama-3.2-3b": {
        "suggest": [LLAMA_FAMILY_PROSE] * 3,
        "choose": "h0: parent\nh1: ancestor\nh2: great_ancestor\nh3: sibling\nh4: full_sibling",
    },
    "gemini-1.5-flash": {
        "suggest": ["h0: parent\nh1: grandparent\nh2: commonAncestor\nh3: sibling\nh4: halfSibling"] * 3,
        "choose": "h0: parent\nh1: grandparent\nh2: commonAncestor\nh3: sibling\nh4: halfSibling",
        "judge": judge_block({
            "h0": [("parent", "1"), ("ancestor", "0.5")],
            "h1": [("grandparent", "1"), ("ancestor", "0.5")],
            "h2": [("commonAncestor", "1"), ("ancestor", "0.5"), ("greatAncestor", "0")],
            "h3": [("sibling", "1"), ("sister", "0.5")],
            "h4": [("cousin", "1"), ("cousins", "0.5"), ("halfSibling", "0.5"),
                   ("fullSibling", "0.5"), ("h3", "0")],
        }),
    },
    "falconmamba-7b": {
        "suggest": ["h0: ancestor\nh1: ancestor\nh2: ancestor\nh3: sister\nh4: h3"] * 3,
        "choose": "h0: ancestor\nh1: ancestor\nh2: ancestor\nh3: sister\nh4: h3",
    },
    "falcon3-7b": {
        # answered a single predicate; the others count as unanswered
        "suggest": ["h2: ancestor"] * 3,
        "choose": "h2: ancestor",
    },
    "command-r-plus": {
        "suggest": ["h0: parent\nh1: grandparent\nh2: common_ancestor\nh3: sibling\nh4: cousins"] * 3,
        "choose": "h0: parent\nh1: grandparent\nh2: common_ancestor\nh3: sibling\nh4: cousins",
        "judge": judge_block({
            "h0": [("parent", "1"), ("ancestor", "0.5")],
            "h1": [("grandparent", "1"), ("ancestor", "0.5")],
            "h2": [("commonAncestor", "0.5"), ("ancestor", "0"), ("greatAncestor", "0.5")],
            "h3": [("sibling", "1"), ("sister", "0.5")],
            "h4": [("cousin", "0.5"), ("cousins", "0.5"), ("halfSibling", "0.5"),
                   ("fullSibling", "0.5"), ("h3", "0")],
        }),
    },
}

FAMILY_EXPECTED = {
    "winners": {
        "h0": "parent", "h1": "grandparent", "h2": "commonAncestor",
        "h3": "sibling", "h4": "cousin",
    },
    "scores": {
        "h0": {"parent": "1.000", "ancestor": "0.375"},
        "h1": {"grandparent": "1.000", "ancestor": "0.500"},
        "h2": {"commonAncestor": "0.875", "ancestor": "0.375", "greatAncestor": "0.250"},
        "h3": {"sibling": "1.000", "sister": "0.375"},
        "h4": {"cousin": "0.875", "cousins": "0.750", "halfSibling": "0.250",
               "fullSibling": "0.250", "h3": "0.000"},
    },
}

COAUTHORS_SCRIPT = {
    "chatgpt-4o": {
        "suggest": ["P: coauthors_with_common_paper"] * 3,
        "choose": "P: coauthors_with_common_paper",
        "judge": judge_block({"P": [
            ("coauthorsWithCommonPaper", "1"), ("coauthors", "0.5"),
            ("authoredTogether", "0.5"), ("coauthoredResearchPaper", "1"),
            ("coAuthoredResearchPaper", "1"), ("coAuthorResearchers", "1"),
            ("coAuthoredPaper", "0.5"),
        ]}),
    },
    "chatgpt-o3mini": {
        "suggest": ["P: coauthors"] * 3,
        "choose": "P: coauthors",
        "judge": judge_block({"P": [
            ("coauthorsWithCommonPaper", "1"), ("coauthors", "0.5"),
            ("authoredTogether", "0.5"), ("coauthoredResearchPaper", "1"),
            ("coAuthoredResearchPaper", "1"), ("coAuthorResearchers", "0.5"),
            ("coAuthoredPaper", "1"),
        ]}),
    },
    "llama-3.2-3b": {
        "suggest": ["P: authoredTogether"] * 3,
        "choose": "P: authoredTogether",
    },
    "gemini-1.5-flash": {
        "suggest": ["P: coauthored_research_paper"] * 3,
        "choose": "P: coauthored_research_paper",
        "judge": judge_block({"P": [
            ("coauthorsWithCommonPaper", "1"), ("coauthors", "0.5"),
            ("authoredTogether", "0.5"), ("coauthoredResearchPaper", "1"),
            ("coAuthoredResearchPaper", "1"), ("coAuthorResearchers", "0.5"),
            ("coAuthoredPaper", "0.5"),
        ]}),
    },
    "falconmamba-7b": {
        "suggest": ["P: Co-authoredResearchPaper"] * 3,
        "choose": "P: Co-authoredResearchPaper",
    },
    "falcon3-7b": {
        "suggest": ["P: CoAuthorResearchers"] * 3,
        "choose": "P: CoAuthorResearchers",
    },
    "command-r-plus": {
        "suggest": ["P: co_authored_paper"] * 3,
        "choose": "P: co_authored_paper",
        "judge": judge_block({"P": [
            ("coauthorsWithCommonPaper", "1"), ("coauthors", "0.5"),
            ("authoredTogether", "1"), ("coauthoredResearchPaper", "1"),
            ("coAuthoredResearchPaper", "1"), ("coAuthorResearchers", "1"),
            ("coAuthoredPaper", "1"),
        ]}),
    },
}

COAUTHORS_EXPECTED = {
    "tie": ["coAuthoredResearchPaper", "coauthoredResearchPaper",
            "coauthorsWithCommonPaper"],
    "scores": {
        "P": {
            "coauthorsWithCommonPaper": "1.000",
            "coauthoredResearchPaper": "1.000",
            "coAuthoredResearchPaper": "1.000",
            "coAuthoredPaper": "0.750",
            "coAuthorResearchers": "0.750",
            "authoredTogether": "0.625",
            "coauthors": "0.500",
        }
    },
}

GRANDPARENT_SCRIPT = {
    model: {
        "suggest": ["h0: parent"] * 3,
        "choose": "h0: parent",
    }
    for model in (
        "chatgpt-4o", "chatgpt-o3mini", "llama-3.2-3b",
        "gemini-1.5-flash", "falcon3-7b", "command-r-plus",
    )
}
GRANDPARENT_SCRIPT["falconmamba-7b"] = {
    "suggest": ["h0: rename_h0"] * 3,
    "choose": "h0: rename_h0",
}
for judge, renameh0 in (
    ("chatgpt-4o", "0"), ("chatgpt-o3mini", "0"),
    ("gemini-1.5-flash", "0"), ("command-r-plus", "0.5"),
):
    GRANDPARENT_SCRIPT[judge]["judge"] = judge_block({
        "h0": [("parent", "1"), ("renameH0", renameh0)],
    })

GRANDPARENT_EXPECTED = {
    "winners": {"h0": "parent"},
    "scores": {"h0": {"parent": "1.000", "renameH0": "0.125"}},
    "human_scores": {"h0": {"parent": "1.000", "renameH0": "0.036"}},
}

COUSINS_SCRIPT = {
    "chatgpt-4o": {
        "suggest": ["h3: siblings"] * 3, "choose": "h3: siblings",
        "judge": judge_block({"h3": [
            ("siblings", "1"), ("sibling", "1"), ("isThirdDegreeRelative", "0.5"),
            ("parent", "0"), ("differentParents", "0"),
        ]}),
    },
    "chatgpt-o3mini": {
        "suggest": ["h3: siblings"] * 3, "choose": "h3: siblings",
        "judge": judge_block({"h3": [
            ("siblings", "1"), ("sibling", "1"), ("isThirdDegreeRelative", "0"),
            ("parent", "0"), ("differentParents", "0"),
        ]}),
    },
    "llama-3.2-3b": {"suggest": ["h3: sibling"] * 3, "choose": "h3: sibling"},
    "gemini-1.5-flash": {
        "suggest": ["h3: sibling"] * 3, "choose": "h3: sibling",
        "judge": judge_block({"h3": [
            ("siblings", "1"), ("sibling", "0"), ("isThirdDegreeRelative", "0.5"),
            ("parent", "0"), ("differentParents", "1"),
        ]}),
    },
    "falconmamba-7b": {
        "suggest": ["h3: is_third_degree_relative"] * 3,
        "choose": "h3: is_third_degree_relative",
    },
    "falcon3-7b": {"suggest": ["h3: parent"] * 3, "choose": "h3: parent"},
    "command-r-plus": {
        "suggest": ["h3: different_parents"] * 3, "choose": "h3: different_parents",
        "judge": judge_block({"h3": [
            ("siblings", "0"), ("sibling", "0"), ("isThirdDegreeRelative", "0"),
            ("parent", "0"), ("differentParents", "1"),
        ]}),
    },
}

COUSINS_EXPECTED = {
    "winners": {"h3": "siblings"},
    "scores": {"h3": {"siblings": "0.750", "sibling": "0.500",
                      "differentParents": "0.500",
                      "isThirdDegreeRelative": "0.250", "parent": "0.000"}},
}

LCM_SCRIPT = {
    "chatgpt-4o": {
        "suggest": ["G: compute_product\nH: divide_values"] * 3,
        "choose": "G: compute_product\nH: divide_values",
        "judge": judge_block({
            "G": [("computeProduct", "0.5"), ("multiply", "0.5"),
                  ("greatestCommonDivisor", "0"),
                  ("findLeastCommonMultipleIntermediate", "1"),
                  ("lowestCommonMultiple", "0"), ("multiplyAndAdd", "0"),
                  ("isMultipleOf", "0")],
            "H": [("divideValues", "0.5"), ("divide", "0.5"),
                  ("leastCommonMultiple", "0"), ("computeLcmFromGcd", "1"),
                  ("highestCommonDivisor", "0"), ("divideAndSubtract", "0"),
                  ("lcmCalculation", "1")],
        }),
    },
    "chatgpt-o3mini": {
        "suggest": ["G: multiply\nH: divide"] * 3,
        "choose": "G: multiply\nH: divide",
        "judge": judge_block({
            "G": [("computeProduct", "1"), ("multiply", "1"),
                  ("greatestCommonDivisor", "0"),
                  ("findLeastCommonMultipleIntermediate", "0.5"),
                  ("lowestCommonMultiple", "0"), ("multiplyAndAdd", "0"),
                  ("isMultipleOf", "0")],
            "H": [("divideValues", "1"), ("divide", "1"),
                  ("leastCommonMultiple", "0"), ("computeLcmFromGcd", "1"),
                  ("highestCommonDivisor", "0"), ("divideAndSubtract", "0"),
                  ("lcmCalculation", "0.5")],
        }),
    },
    "llama-3.2-3b": {
        "suggest": ["G: greatest_common_divisor\nH: least_common_multiple"] * 3,
        "choose": "G: greatest_common_divisor\nH: least_common_multiple",
    },
    "gemini-1.5-flash": {
        "suggest": ["G: find_least_common_multiple_intermediate\nH: compute_lcm_from_gcd"] * 3,
        "choose": "G: find_least_common_multiple_intermediate\nH: compute_lcm_from_gcd",
        "judge": judge_block({
            "G": [("computeProduct", "0.5"), ("multiply", "0.5"),
                  ("greatestCommonDivisor", "0"),
                  ("findLeastCommonMultipleIntermediate", "1"),
                  ("lowestCommonMultiple", "0"), ("multiplyAndAdd", "0"),
                  ("isMultipleOf", "0")],
            "H": [("divideValues", "0.5"), ("divide", "0.5"),
                  ("leastCommonMultiple", "0"), ("computeLcmFromGcd", "1"),
                  ("highestCommonDivisor", "0"), ("divideAndSubtract", "0"),
                  ("lcmCalculation", "0.5")],
        }),
    },
    "falconmamba-7b": {
        "suggest": ["G: lowest_common_multiple\nH: highest_common_divisor"] * 3,
        "choose": "G: lowest_common_multiple\nH: highest_common_divisor",
    },
    "falcon3-7b": {
        "suggest": ["G: multiply_and_add\nH: divide_and_subtract"] * 3,
        "choose": "G: multiply_and_add\nH: divide_and_subtract",
    },
    "command-r-plus": {
        "suggest": ["G: is_multiple_of\nH: lcm_calculation"] * 3,
        "choose": "G: is_multiple_of\nH: lcm_calculation",
        "judge": judge_block({
            "G": [("computeProduct", "0"), ("multiply", "0"),
                  ("greatestCommonDivisor", "1"),
                  ("findLeastCommonMultipleIntermediate", "0"),
                  ("lowestCommonMultiple", "0"), ("multiplyAndAdd", "0"),
                  ("isMultipleOf", "0")],
            "H": [("divideValues", "0"), ("divide", "0.5"),
                  ("leastCommonMultiple", "1"), ("computeLcmFromGcd", "0.5"),
                  ("highestCommonDivisor", "0"), ("divideAndSubtract", "0"),
                  ("lcmCalculation", "0.5")],
        }),
    },
}

LCM_EXPECTED = {
    "winners": {"G": "findLeastCommonMultipleIntermediate", "H": "computeLcmFromGcd"},
    "scores": {
        "G": {"findLeastCommonMultipleIntermediate": "0.625",
              "computeProduct": "0.500", "multiply": "0.500",
              "greatestCommonDivisor": "0.250", "isMultipleOf": "0.000",
              "lowestCommonMultiple": "0.000", "multiplyAndAdd": "0.000"},
        "H": {"computeLcmFromGcd": "0.875", "divide": "0.625",
              "lcmCalculation": "0.625", "divideValues": "0.500",
              "leastCommonMultiple": "0.250", "highestCommonDivisor": "0.000",
              "divideAndSubtract": "0.000"},
    },
}

REACHABILITY_SCRIPT = {
    "chatgpt-5": {
        "suggest": ["inv1: direct_connection"] * 3,
        "choose": "inv1: direct_connection",
        "judge": judge_block({"inv1": [
            ("directlyConnected", "1"), ("directConnection", "1"),
            ("isConnected", "1"), ("can reach", "0"),
        ]}),
    },
    "llama-3.2-3b": {
        "suggest": ["inv1: is_connected"] * 3,
        "choose": "inv1: is_connected",
    },
    "gemini-1.5-flash": {
        "suggest": ["inv1: directly_connected"] * 3,
        "choose": "inv1: directly_connected",
        "judge": judge_block({"inv1": [
            ("directlyConnected", "1"), ("directConnection", "1"),
            ("isConnected", "0.5"), ("can reach", "0.5"),
        ]}),
    },
    "falconmamba-7b": {
        "suggest": ["inv1: can reach"] * 3,
        "choose": "inv1: can reach",
    },
    "falcon3-7b": {
        "suggest": ["I am unable to determine a suitable name for these rules."] * 3,
    },
    "command-r-plus": {
        "suggest": ["inv1: is_connected"] * 3,
        "choose": "inv1: is_connected",
        "judge": judge_block({"inv1": [
            ("directlyConnected", "0.5"), ("directConnection", "0.5"),
            ("isConnected", "1"), ("can reach", "0.5"),
        ]}),
    },
}

REACHABILITY_EXPECTED = {
    "tie": ["directConnection", "directlyConnected", "isConnected"],
    "lex_winner": "directConnection",
    "scores": {"inv1": {"directConnection": "0.833", "isConnected": "0.833",
                        "directlyConnected": "0.833", "can reach": "0.333"}},
}

FALCON3_MATH_STEPS = {
    "A": "A: is_number", "P": "P: is_greater_number", "Q": "Q: is_number_or_equal",
    "R": "R: is_less_number", "S": "S: is_number_or_less", "T": "T: is_equal_number",
    "B": "B: is_even_number", "C": "C: is_odd_number", "D": "D: negate_if_negative",
    "E": "E: add_numbers", "F": "F: subtract_numbers", "G": "G: multiply_numbers",
    "H": "H: divide_numbers", "L": "L: divisible_by", "M": "M: swap_and_mod_numbers",
    "N": "N: calculate_result",
}

FALCONMAMBA_MATH_STEPS = {
    "A": "A: integer_or_float", "P": "P: greater_than_or_equal",
    "Q": "Q: greater_than_or_equal", "R": "R: less_than", "S": "S: less_than",
    "T": "T: equal_to", "B": "B: even_integer", "C": "C: odd_integer",
    "D": "D: abs", "E": "E: sum", "F": "F: subtract", "G": "G: multiplication",
    "H": "H: division_by_non_zero_integer", "L": "L: even_integer",
    "M": "M: even_integer", "N": "N: even_integer_product",
}

MATH_EXPECTED = {
    "falcon3": {target: line.split(": ", 1)[1] for target, line in FALCON3_MATH_STEPS.items()},
    "falconmamba": {
        target: line.split(": ", 1)[1] for target, line in FALCONMAMBA_MATH_STEPS.items()
    },
    "falconmamba_failed_steps": ["Q", "S"],
    "step_order": ["A", "P", "Q", "R", "S", "T", "B", "C", "D", "E", "F", "G",
                   "H", "L", "M", "N"],
}

SCRIPTS = {
    "coauthors": COAUTHORS_SCRIPT,
    "family": FAMILY_SCRIPT,
    "grandparent": GRANDPARENT_SCRIPT,
    "cousins": COUSINS_SCRIPT,
    "lcm": LCM_SCRIPT,
    "reachability": REACHABILITY_SCRIPT,
}

EXPECTED = {
    "coauthors": COAUTHORS_EXPECTED,
    "family": FAMILY_EXPECTED,
    "grandparent": GRANDPARENT_EXPECTED,
    "cousins": COUSINS_EXPECTED,
    "lcm": LCM_EXPECTED,
    "math": MATH_EXPECTED,
    "reachability": REACHABILITY_EXPECTED,
}

GRANDPARENT_HUMAN_CSV = "placeholder,candidate,judge_id,score\n" + "\n".join(
    [f"h0,parent,hj{n:02d},1" for n in range(1, 15)]
    + ["h0,renameH0,hj01,0.5"]
    + [f"h0,renameH0,hj{n:02d},0" for n in range(2, 15)]
) + "\n"


def record_corpus(name: str) -> None:
    entry = load_entry(name)
    fixtures = CORPUS_DIR / name / "fixtures.jsonl"
    if fixtures.exists():
        fixtures.unlink()

    if name == "math":
        for model, steps in (
            ("falcon3-7b", FALCON3_MATH_STEPS),
            ("falconmamba-7b", FALCONMAMBA_MATH_STEPS),
        ):
            gateway = Gateway(
                "record", FixtureStore(fixtures),
                transport=ScriptedTransport({model: {"fewshot": steps}}),
            )
            config = entry.config()
            from prednamer.gateway import ModelEndpoint

            config.models = [ModelEndpoint(model, "https://replay.invalid/v1")]
            plan, report = pipeline.run_fewshot(
                entry.program(), config, gateway, label=name
            )
            resolved = {
                step["target"].split("/")[0]: step["resolved"]
                for step in report.steps
            }
            print(f"  math/{model}: {sum(1 for v in resolved.values() if v)} steps resolved")
    else:
        gateway = Gateway(
            "record", FixtureStore(fixtures),
            transport=ScriptedTransport(SCRIPTS[name]),
        )
        plan, report = pipeline.run(entry.program(), entry.config(), gateway, label=name)
        winners = {
            key.split("/")[0]: value["name"] for key, value in report.data["plan"].items()
        }
        print(f"  {name}: plan={winners} anomalies={len(report.anomalies)}")

    (CORPUS_DIR / name / "expected.json").write_text(
        json.dumps(EXPECTED[name], indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def main() -> None:
    for name in CORPUS_NAMES:
        print(f"recording {name}")
        record_corpus(name)
    (CORPUS_DIR / "grandparent" / "human_scores.csv").write_text(
        GRANDPARENT_HUMAN_CSV, encoding="utf-8"
    )
    print("done")


if __name__ == "__main__":
    main()
