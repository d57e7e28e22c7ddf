from __future__ import annotations

import json

import pytest

from conftest import replay_run
from prednamer import pipeline
from prednamer.config import RunConfig
from prednamer.corpus import load_entry
from prednamer.gateway import FixtureStore, Gateway, ModelEndpoint, ScriptedTransport
from prednamer.judging import format_score
from prednamer.logic import parse_program
from prednamer.pipeline import emit_report, parse_report


def endpoint(model_id: str) -> ModelEndpoint:
    return ModelEndpoint(model_id, "https://test.invalid/v1")


def scripted_run(script, config, program, tmp_path, few_shot=False):
    """Record a scripted run, then replay it; returns the replay result."""
    store_path = tmp_path / "fixtures.jsonl"
    recorder = Gateway("record", FixtureStore(store_path),
                       transport=ScriptedTransport(script))
    runner = pipeline.run_fewshot if few_shot else pipeline.run
    runner(program, config, recorder)
    replayer = Gateway("replay", FixtureStore(store_path))
    return runner(program, config, replayer)


class TestCorpusReplay:
    def test_family_plan_matches_published_winners(self, family_run):
        plan, report = family_run
        expected = load_entry("family").expected()
        winners = {
            key.split("/")[0]: value["name"]
            for key, value in report.data["plan"].items()
        }
        assert winners == expected["winners"]

    def test_family_score_table(self, family_run):
        _, report = family_run
        expected = load_entry("family").expected()["scores"]
        ranking = report.ranking
        for placeholder, score_map in expected.items():
            ranked = {
                rc.candidate: format_score(rc.mean)
                for rc in ranking.per_placeholder[placeholder]
            }
            assert ranked == score_map

    def test_family_no_anomalies_and_counts(self, family_run):
        _, report = family_run
        assert report.anomalies == []
        suggest = [e for e in report.data["exchanges"] if e["purpose"] == "suggest"]
        assert len(suggest) == 21  # n=7 models x k=3 rounds

    def test_family_candidates_trace_to_exchanges(self, family_run):
        _, report = family_run
        recorded = {
            (e["model_id"], e["round_index"])
            for e in report.data["exchanges"]
            if e["purpose"] == "suggest"
        }
        for cands in report.candidates.per_placeholder.values():
            for candidate in cands:
                assert candidate.sources <= recorded

    def test_family_self_choices_reported_not_pruning(self, family_run):
        _, report = family_run
        choices = report.data["self_choices"]
        assert choices["falconmamba-7b"]["h4"] == "h3"
        # the judged pool still contains names no model self-chose
        assert "sister" in report.candidates.names_for("h3")

    @pytest.mark.parametrize(
        "name", ["grandparent", "cousins", "lcm"]
    )
    def test_single_placeholder_corpora(self, name):
        plan, report = replay_run(name)
        expected = load_entry(name).expected()
        winners = {
            key.split("/")[0]: value["name"]
            for key, value in report.data["plan"].items()
        }
        assert winners == expected["winners"]
        for placeholder, score_map in expected["scores"].items():
            ranked = {
                rc.candidate: format_score(rc.mean)
                for rc in report.ranking.per_placeholder[placeholder]
            }
            assert ranked == score_map

    def test_coauthors_tie_deferred(self):
        plan, report = replay_run("coauthors")
        expected = load_entry("coauthors").expected()
        resolution = report.resolutions["P"]
        assert resolution.action == "tie_defer"
        assert sorted(resolution.tied) == expected["tie"]
        assert not plan

    def test_reachability_tie_and_scores(self, reachability_run):
        plan, report = reachability_run
        expected = load_entry("reachability").expected()
        resolution = report.resolutions["inv1"]
        assert resolution.tie is True
        assert sorted(resolution.tied) == expected["tie"]
        ranked = {
            rc.candidate: format_score(rc.mean)
            for rc in report.ranking.per_placeholder["inv1"]
        }
        assert ranked == expected["scores"]["inv1"]
        invalid = report.candidates.find("inv1", "can reach")
        assert invalid.valid is False and invalid.reason == "whitespace"

    def test_reachability_lex_policy(self):
        plan, report = replay_run("reachability", {"tie_policy": "lex"})
        assert report.resolutions["inv1"].winner == "directConnection"
        assert plan.to_dict()["inv1/2"]["name"] == "directConnection"

    def test_empty_program_run(self):
        config = load_entry("family").config()
        gateway = Gateway("replay", load_entry("family").fixtures())
        plan, report = pipeline.run(parse_program("edge(a,b)."), config, gateway)
        assert not plan
        assert report.data["inventory"] == []
        assert "inventory empty" in report.data["notes"][0]


class TestReportMachineFormat:
    def test_byte_stable_and_round_trips(self, family_run):
        _, report = family_run
        text_one = emit_report(report, "machine")
        plan_two, report_two = replay_run("family")
        assert emit_report(report_two, "machine") == text_one
        assert parse_report(text_one).data == report.data

    def test_schema_version_present(self, family_run):
        _, report = family_run
        assert report.data["schema_version"] == 1
        assert json.loads(emit_report(report, "machine"))["schema_version"] == 1

    def test_table_format_orders_by_aggregate(self, family_run):
        _, report = family_run
        table = emit_report(report, "table")
        block = table.split("== h0 ==")[1].split("==")[0]
        assert block.index("parent") < block.index("ancestor")
        assert "1.000" in block and "0.375" in block

    def test_renamed_hash_matches_actual_rewrite(self, family_run):
        plan, report = family_run
        from prednamer.rewriter import apply, renamed_program_sha256

        renamed = apply(load_entry("family").program(), plan)
        assert report.data["renamed_program_sha256"] == renamed_program_sha256(renamed)


class TestFaultIsolation:
    FAMILY_ECHO = (
        "H0(X,Y) :- MOTHER(X,Y).\n"
        "H0(X,Y) :- FATHER(X,Y).\n"
        "H1(X,Y) :- H0(X,Z), H0(Z,Y).\n"
    )

    def script(self):
        judge = lambda sections: "\n".join(  # noqa: E731
            line for ph, scored in sections.items()
            for line in [f"{ph}:"] + [f"- {n}: {s}" for n, s in scored]
        )
        return {
            "gpt": {
                "suggest": ["h0: parent\nh1: grandparent"] * 3,
                "choose": "h0: parent\nh1: grandparent",
                "judge": judge({
                    "h0": [("parent", "1"), ("ancestor", "0.5")],
                    "h1": [("grandparent", "1")],
                }),
            },
            "llama": {
                "suggest": ["h0: ancestor\nh1: grandparent"] * 3,
                "choose": "h0: ancestor\nh1: grandparent",
                "judge": judge({
                    "h0": [("parent", "1"), ("ancestor", "0")],
                    "h1": [("grandparent", "1")],
                }),
            },
            # the rules-echo failure mode: no extractable names at all
            "mamba": {"suggest": [self.FAMILY_ECHO] * 3},
        }

    def config(self):
        return RunConfig(
            models=[endpoint("gpt"), endpoint("llama"), endpoint("mamba")],
            judges=[endpoint("gpt"), endpoint("llama")],
            k=3,
            tie_policy="defer",
        )

    def program(self):
        return parse_program(
            "h0(X,Y) :- mother(X,Y).\nh0(X,Y) :- father(X,Y).\n"
            "h1(X,Y) :- h0(X,Z), h0(Z,Y).\n"
        )

    def test_echo_model_contributes_nothing_and_run_completes(self, tmp_path):
        plan, report = scripted_run(
            self.script(), self.config(), self.program(), tmp_path
        )
        assert report.data["model_candidates"]["mamba"] == {}
        assert report.data["self_choices"]["mamba"] is None
        kinds = {a["kind"] for a in report.anomalies}
        assert kinds == {"no_usable_suggestions"}
        winners = {k.split("/")[0]: v["name"] for k, v in report.data["plan"].items()}
        assert winners == {"h0": "parent", "h1": "grandparent"}

    def test_transport_failure_is_per_exchange(self, tmp_path):
        inner = ScriptedTransport(self.script())

        def flaky(ep, prompt, round_index):
            if ep.model_id == "llama" and round_index == 2 and \
                    ScriptedTransport.classify(prompt) == "suggest":
                raise ConnectionError("llama round 2 lost")
            return inner(ep, prompt, round_index)

        config = self.config()
        gateway = Gateway("live", transport=flaky)
        plan, report = pipeline.run(self.program(), config, gateway)
        failed = [e for e in report.data["exchanges"] if not e["ok"]]
        assert len(failed) == 1 and failed[0]["model_id"] == "llama"
        winners = {k.split("/")[0]: v["name"] for k, v in report.data["plan"].items()}
        assert winners == {"h0": "parent", "h1": "grandparent"}


class TestRejudge:
    def script(self, second_round_breaks_tie: bool):
        tied = "h0:\n- parent: 1\n- ancestor: 1"
        broken = "h0:\n- parent: 1\n- ancestor: 0.5"
        return {
            "m1": {
                "suggest": ["h0: parent", "h0: ancestor", "h0: parent"],
                "choose": "h0: parent",
                "judge": [tied, broken if second_round_breaks_tie else tied],
            },
        }

    def config(self):
        return RunConfig(
            models=[endpoint("m1")], judges=[endpoint("m1")], k=3,
            tie_policy="rejudge", rejudge_budget=1,
        )

    def program(self):
        return parse_program("h0(X,Y) :- mother(X,Y).")

    def test_rejudge_round_breaks_tie(self, tmp_path):
        plan, report = scripted_run(
            self.script(True), self.config(), self.program(), tmp_path
        )
        resolution = report.resolutions["h0"]
        assert resolution.action == "selected"
        assert resolution.winner == "parent"
        # the rejudge round added a second judge column
        assert report.score_matrix.judge_ids == ["m1", "m1#2"]

    def test_rejudge_budget_then_defer(self, tmp_path):
        plan, report = scripted_run(
            self.script(False), self.config(), self.program(), tmp_path
        )
        resolution = report.resolutions["h0"]
        assert resolution.action == "tie_defer"
        assert resolution.winner is None
        assert not plan


class TestJudgeRetry:
    def test_format_error_then_retry(self, tmp_path):
        script = {
            "m1": {
                "suggest": ["h0: parent"] * 2,
                "choose": "h0: parent",
                "judge": ["no scores here, sorry", "h0:\n- parent: 1"],
            },
        }
        config = RunConfig(
            models=[endpoint("m1")], judges=[endpoint("m1")], k=2,
            tie_policy="defer", judge_retry_budget=1,
        )
        plan, report = scripted_run(
            script, config, parse_program("h0(a)."), tmp_path
        )
        assert report.resolutions["h0"].winner == "parent"
        assert any(a["kind"] == "judge_format" for a in report.anomalies)

    def test_off_rubric_then_missing(self, tmp_path):
        script = {
            "m1": {
                "suggest": ["h0: parent\nh1: other"],
                "choose": "h0: parent\nh1: other",
                "judge": [
                    "h0:\n- parent: 0.7\nh1:\n- other: 1",
                    "h0:\n- parent: 0.9\nh1:\n- other: 1",
                ],
            },
        }
        config = RunConfig(
            models=[endpoint("m1")], judges=[endpoint("m1")], k=1,
            tie_policy="defer", judge_retry_budget=1,
        )
        plan, report = scripted_run(
            script, config, parse_program("h0(a).\nh1(b)."), tmp_path
        )
        # parent never got an on-rubric score: not ranked, placeholder fails
        assert report.resolutions["h0"].action == "failed"
        assert report.resolutions["h1"].winner == "other"
        assert sum(a["kind"] == "off_rubric" for a in report.anomalies) >= 2


class TestFewshot:
    def test_math_falcon3_step_sequence(self):
        plan, report = replay_run("math")
        expected = load_entry("math").expected()
        steps = report.steps
        assert len(steps) == 16
        assert steps[0]["target"] == "A/1" and steps[0]["resolved"] == "is_number"
        assert steps[1]["target"] == "P/2" and steps[1]["resolved"] == "is_greater_number"
        assert [s["target"].split("/")[0] for s in steps] == expected["step_order"]
        resolved = {s["target"].split("/")[0]: s["resolved"] for s in steps}
        assert resolved == expected["falcon3"]

    def test_math_falcon3_exchange_count(self):
        _, report = replay_run("math")
        fewshot = [e for e in report.data["exchanges"] if e["purpose"] == "fewshot_step"]
        assert len(fewshot) == 16  # n=1 model x one round per placeholder

    def test_math_falconmamba_collisions_fail_softly(self):
        entry = load_entry("math")
        config = entry.config()
        config.models = [ModelEndpoint("falconmamba-7b", "https://replay.invalid/v1")]
        gateway = Gateway("replay", entry.fixtures())
        plan, report = pipeline.run_fewshot(entry.program(), config, gateway)
        expected = entry.expected()
        failed = [s for s in report.steps if s["resolved"] is None]
        assert [s["target"].split("/")[0] for s in failed] == (
            expected["falconmamba_failed_steps"]
        )
        resolved = {
            s["target"].split("/")[0]: s["resolved"]
            for s in report.steps if s["resolved"]
        }
        assert all(resolved[t] == expected["falconmamba"][t] for t in resolved)
        assert len(plan.assignments) == 14

    def test_fewshot_majority_and_tiebreak(self, tmp_path):
        script = {
            "a": {"fewshot": {"h0": "h0: parent"}},
            "b": {"fewshot": {"h0": "h0: parent"}},
            "c": {"fewshot": {"h0": "h0: ancestor"}},
        }
        config = RunConfig(
            models=[endpoint("a"), endpoint("b"), endpoint("c")],
            judges=[], mode="few_shot", tie_policy="defer", k=1,
        )
        plan, report = scripted_run(
            script, config, parse_program("h0(X,Y) :- mother(X,Y)."), tmp_path,
            few_shot=True,
        )
        step = report.steps[0]
        assert step["resolved"] == "parent" and step["method"] == "majority"

    def test_fewshot_lex_tiebreak_without_judges(self, tmp_path):
        script = {
            "a": {"fewshot": {"h0": "h0: parent"}},
            "b": {"fewshot": {"h0": "h0: ancestor"}},
        }
        config = RunConfig(
            models=[endpoint("a"), endpoint("b")], judges=[],
            mode="few_shot", tie_policy="defer", k=1,
        )
        plan, report = scripted_run(
            script, config, parse_program("h0(X,Y) :- mother(X,Y)."), tmp_path,
            few_shot=True,
        )
        step = report.steps[0]
        assert step["method"] == "lex_tiebreak"
        assert step["resolved"] == "ancestor"

    def test_fewshot_invalid_suggestion_fails_step(self, tmp_path):
        script = {"a": {"fewshot": {"h0": "h0: can reach"}}}
        config = RunConfig(
            models=[endpoint("a")], judges=[], mode="few_shot",
            tie_policy="defer", k=1,
        )
        plan, report = scripted_run(
            script, config, parse_program("h0(X,Y) :- mother(X,Y)."), tmp_path,
            few_shot=True,
        )
        step = report.steps[0]
        assert step["resolved"] is None
        assert "invalid name" in step["note"]
        assert not plan

    def test_single_placeholder_fewshot(self, tmp_path):
        script = {"a": {"fewshot": {"h0": "h0: parent"}}}
        config = RunConfig(
            models=[endpoint("a")], judges=[], mode="few_shot",
            tie_policy="defer", k=1,
        )
        plan, report = scripted_run(
            script, config,
            parse_program("grandparent(X,Y) :- h0(X,Z), h0(Z,Y)."), tmp_path,
            few_shot=True,
        )
        assert plan.to_dict() == {
            "h0/2": {"name": "parent", "mean": None, "tie": False, "sources": ["a"]}
        }
