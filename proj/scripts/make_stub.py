"""Writes data/minimarco/stub_completions.jsonl.

Prompts for the context and few-shot templates depend on the index and the
few-shot file, so they are rendered through `qexp expand` rather than typed
by hand. Usage: make_stub.py <path to qexp binary>
"""
import json
import os
import subprocess
import sys
import tempfile

HERE = os.path.dirname(os.path.abspath(__file__))
DATA = os.path.join(HERE, "..", "data", "minimarco")
QUERY_ID = "1045405"

# Flan-UL2 outputs for "who owns jaguar motors?".
COMPLETIONS = {
    "cot": "Jaguar Land Rover is a British multinational car manufacturer, founded by William Lyons in 1931. "
           "Its headquarters are in Whitley, Coventry, United Kingdom and is a constituent of the FTSE 250 Index. "
           "The company is a wholly owned subsidiary of Tata Motors of India. So the final answer is Tata Motors.",
    "cot_prf": "Jaguar is owned by the Indian automobile manufacturer Tata Motors Ltd. The final answer: Tata Motors Ltd.",
    "q2d": "Jaguar is a division of Tata Motors, a company owned by the Tata family.",
}


def render_prompt(qexp, template, stub):
    out = subprocess.run(
        [qexp, "expand", "-c", os.path.join(DATA, "config.json"), "--expander", "llm:" + template,
         "--stub", stub, "-q", QUERY_ID, "--cache-dir", tempfile.mkdtemp()],
        check=True, capture_output=True, text=True).stdout
    start = out.index("==\n") + 3
    return out[start:out.index("\n== completion")]


def main():
    qexp = sys.argv[1]
    with tempfile.NamedTemporaryFile("w", suffix=".jsonl", delete=False) as f:
        f.write(json.dumps({"default": ""}) + "\n")
        blank = f.name
    lines = []
    for template, completion in COMPLETIONS.items():
        lines.append({"prompt": render_prompt(qexp, template, blank), "completion": completion})
    lines.append({"default": ""})
    with open(os.path.join(DATA, "stub_completions.jsonl"), "w", encoding="utf-8") as f:
        for rec in lines:
            f.write(json.dumps(rec) + "\n")
    os.unlink(blank)


if __name__ == "__main__":
    main()
