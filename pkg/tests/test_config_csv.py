import json

import numpy as np
import pandas as pd
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tabtree import pipeline
from tabtree.config import build_registry, emit_config, parse_config
from tabtree.csvio import format_cell, read_csv_text, write_csv_text
from tabtree.errors import ConfigError

CUSTOM = {
    "transformdict": {"newt": {"parents": ["newt"], "auntsuncles": ["pwr2"], "cousins": ["NArw"],
                               "friends": ["bins"]}},
    "processdict": {"newt": {"functionpointer": "retn", "NArowtype": "numeric", "MLinfilltype": "numeric",
                             "labelctgy": "newt"}},
    "pipeline": {"labels_column": "y", "assigncat": {"newt": ["col1"]}, "valpercent": 0.1},
}


def test_parse_emit_fixed_point():
    cfg = parse_config(CUSTOM)
    text = emit_config(cfg)
    assert emit_config(parse_config(text)) == text


def test_functionpointer_clone():
    reg = build_registry(parse_config(CUSTOM))
    newt = reg["newt"]
    assert newt.process.fit_fn == "retn" and newt.process.suffix == "newt"
    assert newt.process.labelctgy == "newt"
    assert newt.tree.friends == ("bins",)


def test_custom_tree_headers():
    cfg = parse_config(CUSTOM)
    reg = build_registry(cfg)
    rng = np.random.default_rng(0)
    frame = pd.DataFrame({"col1": rng.uniform(1, 500, 50), "y": rng.normal(size=50)})
    out = pipeline.fit(frame, cfg.pipeline, reg)
    assert list(out.train.columns[:3]) == ["col1_newt", "col1_newt_bins_0", "col1_newt_bins_1"]
    assert "col1_pwr2_0" in out.train.columns and "col1" not in out.train.columns
    assert "col1_NArw" in out.train.columns


@pytest.mark.parametrize("bad", [
    "not json",
    [],
    {"extra": {}},
    {"processdict": {"x": {"fit_fn": "retn"}}},
    {"processdict": {"x": {"functionpointer": "nope"}}},
    {"processdict": {"x": {"functionpointer": "retn", "bogus": 1}}},
    {"transformdict": {"x": {"parents": ["retn"]}}},
    {"transformdict": {"x": {"uncles": ["retn"]}}, "processdict": {"x": {"functionpointer": "retn"}}},
    {"processdict": {"a": {"functionpointer": "b"}, "b": {"functionpointer": "a"}}},
    {"pipeline": {"nope": 1}},
])
def test_bad_configs(bad):
    with pytest.raises(ConfigError):
        build_registry(parse_config(bad if isinstance(bad, str) else json.dumps(bad)))


def test_defaultparams_merge():
    reg = build_registry(parse_config({"processdict": {"wide": {"functionpointer": "bnwd",
                                                                "defaultparams": {"width": 5.0}}}}))
    assert reg["wide"].process.default_params["width"] == 5.0


def test_format_cell():
    assert format_cell(0.1) == "0.10000000000000001"
    assert format_cell(None) == "" and format_cell(float("nan")) == ""
    assert format_cell(3) == "3" and format_cell(True) == "1"


def test_missing_tokens_and_quoting():
    frame = read_csv_text('a,b\n1,NaN\n,"x, y"\n"he said ""hi""",nan\n')
    assert frame["a"].tolist() == ["1", None, 'he said "hi"']
    assert frame["b"].tolist() == [None, "x, y", None]


def test_malformed_csv():
    with pytest.raises(ValueError, match="line 2"):
        read_csv_text("a,b\n1\n")
    with pytest.raises(ValueError, match="duplicate"):
        read_csv_text("a,a\n1,2\n")


plain = st.characters(blacklist_characters="\x00")
text_cell = st.one_of(st.none(), st.text(plain, min_size=1).filter(lambda s: s not in ("NaN", "nan")))


@given(st.lists(st.text(plain, min_size=1), min_size=1, max_size=4, unique=True).flatmap(
    lambda hs: st.tuples(st.just(hs), st.lists(st.lists(text_cell, min_size=len(hs), max_size=len(hs)),
                                               max_size=6))))
def test_csv_round_trip(table):
    headers, rows = table
    frame = pd.DataFrame({h: pd.Series([r[j] for r in rows], dtype=object) for j, h in enumerate(headers)},
                         columns=headers)
    text = write_csv_text(frame)
    back = read_csv_text(text)
    assert list(back.columns) == headers
    assert back.to_numpy().tolist() == frame.to_numpy().tolist()
    assert write_csv_text(back) == text


@given(st.lists(st.floats(allow_nan=False, allow_infinity=False), min_size=1, max_size=20))
def test_float_text_exact(values):
    text = write_csv_text(pd.DataFrame({"v": values}))
    back = [float(c) for c in read_csv_text(text)["v"]]
    assert back == values
