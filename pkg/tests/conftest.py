import json
import sys
import textwrap
from pathlib import Path

import numpy as np
import pytest

from ggez.checkpoint import Checkpoint, TensorRecord
from ggez.corpus import CorpusRecord
from ggez.regions import RegionPartition

# Line-protocol scorer stub. Modes:
#   len         reward = len(text)
#   nan-marker  reward = NaN when "NAN" in text, else len(text)
#   crash       exit immediately
SCORER_STUB = """\
import json, sys

mode = sys.argv[1] if len(sys.argv) > 1 else "len"
if mode == "crash":
    sys.exit(1)
for line in sys.stdin:
    req = json.loads(line)
    text = req.get("text", "")
    if mode == "nan-marker" and "NAN" in text:
        reward = float("nan")
    else:
        reward = float(len(text))
    sys.stdout.write(json.dumps({"id": req["id"], "reward": reward}) + "\\n")
    sys.stdout.flush()
"""

# Line-protocol translator stub. Modes:
#   identity    text unchanged
#   upper       text uppercased
#   tagged      "<lang>:" prefix
#   fail-marker error on "FAIL" in text
TRANSLATOR_STUB = """\
import json, sys

mode = sys.argv[1] if len(sys.argv) > 1 else "identity"
for line in sys.stdin:
    req = json.loads(line)
    text = req.get("text", "")
    lang = req.get("target_lang", "")
    if mode == "fail-marker" and "FAIL" in text:
        sys.stdout.write(json.dumps({"id": req["id"]}) + "\\n")
    else:
        if mode == "upper":
            text = text.upper()
        elif mode == "tagged":
            text = f"{lang}:{text}"
        sys.stdout.write(json.dumps({"id": req["id"], "text": text}) + "\\n")
    sys.stdout.flush()
"""

# Sweep evaluator stub: parses the merged container itself (struct + json,
# no toolkit import), takes m = mean of tensor "w", and reports
# q_global = 1 - m^2, q_regional = 1 - (1 - m)^2. Mode "fail" exits nonzero.
EVALUATOR_STUB = """\
import json, struct, sys

if sys.argv[1] == "fail":
    print("synthetic evaluator failure", file=sys.stderr)
    sys.exit(3)
path = sys.argv[-1]
raw = open(path, "rb").read()
(n,) = struct.unpack("<Q", raw[:8])
header = json.loads(raw[8 : 8 + n].decode("utf-8"))
entry = header["w"]
assert entry["dtype"] == "F32"
begin, end = entry["data_offsets"]
buf = raw[8 + n :][begin:end]
values = struct.unpack("<%df" % (len(buf) // 4), buf)
m = sum(values) / len(values)
print(json.dumps({"q_global": 1 - m * m, "q_regional": 1 - (1 - m) * (1 - m)}))
"""


@pytest.fixture(scope="session")
def stub_dir(tmp_path_factory) -> Path:
    path = tmp_path_factory.mktemp("stubs")
    (path / "scorer.py").write_text(textwrap.dedent(SCORER_STUB))
    (path / "translator.py").write_text(textwrap.dedent(TRANSLATOR_STUB))
    (path / "evaluator.py").write_text(textwrap.dedent(EVALUATOR_STUB))
    return path


@pytest.fixture(scope="session")
def scorer_cmd(stub_dir):
    def make(mode: str = "len") -> str:
        return f"{sys.executable} -u {stub_dir / 'scorer.py'} {mode}"

    return make


@pytest.fixture(scope="session")
def translator_cmd(stub_dir):
    def make(mode: str = "identity") -> str:
        return f"{sys.executable} -u {stub_dir / 'translator.py'} {mode}"

    return make


@pytest.fixture(scope="session")
def evaluator_cmd(stub_dir):
    def make(mode: str = "curve") -> str:
        return f"{sys.executable} -u {stub_dir / 'evaluator.py'} {mode}"

    return make


@pytest.fixture
def partition() -> RegionPartition:
    """SEA target plus an East-Asia region so out-of-region codes resolve."""
    return RegionPartition.from_mapping(
        {
            "SEA": ["SG", "ID", "MY", "BN", "TH", "PH", "VN", "MM", "KH", "LA", "TL"],
            "EA": ["JP", "KR", "CN"],
        },
        target="SEA",
    )


@pytest.fixture
def partition_file(tmp_path, partition) -> Path:
    path = tmp_path / "partition.json"
    path.write_text(
        json.dumps(
            {
                "global_name": "Global",
                "target": "SEA",
                "regions": {label: sorted(codes) for label, codes in partition.regions.items()},
            }
        )
    )
    return path


def make_record(i: int, region: str = "ID", language: str = "eng",
                reward: float | None = None, text: str | None = None) -> CorpusRecord:
    return CorpusRecord(
        id=f"rec{i:05d}",
        region=region,
        language=language,
        text=text if text is not None else f"example text number {i}",
        reward=reward,
        source="unit-test",
    )


def make_checkpoint(arrays: dict[str, np.ndarray], metadata=None) -> Checkpoint:
    ckpt = Checkpoint(metadata=dict(metadata or {}))
    for name, arr in arrays.items():
        ckpt.add(TensorRecord.from_numpy(name, arr))
    return ckpt


def write_jsonl_file(path: Path, records) -> Path:
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record.to_json_dict(), ensure_ascii=False) + "\n")
    return path
