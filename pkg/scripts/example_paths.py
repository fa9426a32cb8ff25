"""Print the entity-to-entity paths of the example sentences under each scheme."""

from sdprel import fixtures
from sdprel.pipeline import extract_samples
from sdprel.sdp import serialize_sdp
from sdprel.treebank_io import SCHEMES, load_relations, load_spans, parse_conll


def main():
    spans = load_spans(fixtures.spans_text())
    relations = load_relations(fixtures.relations_text())
    for scheme in SCHEMES:
        print(f"[{scheme}]")
        for s in extract_samples(parse_conll(fixtures.conll_text(scheme), scheme), spans, relations):
            print(f"  {s.instance.sentence_ref} {s.instance.label:<14} {serialize_sdp(s.path)}")


if __name__ == "__main__":
    main()
