"""Hand-encoded parses of the example sentences under the three schemes.

``All knowledge sources are treated as feature functions`` is a full parse
under each scheme. For the other three sentences only the arcs on the
entity-to-entity path are reference material; the remaining arcs are
plausible fill-in.
"""

from __future__ import annotations

from .treebank_io import EntitySpan, RelationInstance

# (form, pos, head, deprel) per token, keyed by scheme
_KNOWLEDGE_SOURCES = {
    "conll08": [
        ("All", "DT", 3, "NMOD"), ("knowledge", "NN", 3, "NMOD"), ("sources", "NNS", 4, "SBJ"),
        ("are", "VBP", 0, "ROOT"), ("treated", "VBN", 4, "VC"), ("as", "IN", 5, "ADV"),
        ("feature", "NN", 8, "NMOD"), ("functions", "NNS", 6, "PMOD"),
    ],
    "stanford_basic": [
        ("All", "DT", 3, "det"), ("knowledge", "NN", 3, "nmod"), ("sources", "NNS", 5, "nsubjpass"),
        ("are", "VBP", 5, "auxpass"), ("treated", "VBN", 0, "root"), ("as", "IN", 5, "prep"),
        ("feature", "NN", 8, "nmod"), ("functions", "NNS", 6, "pobj"),
    ],
    "ud": [
        ("All", "DT", 3, "det"), ("knowledge", "NN", 3, "nmod"), ("sources", "NNS", 5, "nsubjpass"),
        ("are", "VBP", 5, "auxpass"), ("treated", "VBN", 0, "root"), ("as", "IN", 8, "case"),
        ("feature", "NN", 8, "nmod"), ("functions", "NNS", 5, "nmod"),
    ],
}

_PUNCT_SENT = {
    "conll08": [
        ("This", "DT", 2, "sbj"), ("indicates", "VBZ", 0, "root"), ("that", "IN", 2, "obj"),
        ("there", "EX", 5, "sbj"), ("is", "VBZ", 3, "sub"), ("no", "DT", 7, "nmod"),
        ("need", "NN", 5, "prd"), ("to", "TO", 7, "nmod"), ("add", "VB", 8, "im"),
        ("punctuation", "NN", 9, "obj"), ("in", "IN", 9, "adv"), ("transcribing", "VBG", 11, "pmod"),
        ("spoken", "VBN", 14, "nmod"), ("corpora", "NNS", 12, "obj"), ("simply", "RB", 9, "adv"),
        ("in", "IN", 9, "prp"), ("order", "NN", 16, "pmod"), ("to", "TO", 17, "nmod"),
        ("help", "VB", 18, "im"), ("parsers", "NNS", 19, "obj"), (".", ".", 2, "p"),
    ],
    "stanford_basic": [
        ("This", "DT", 2, "nsubj"), ("indicates", "VBZ", 0, "root"), ("that", "IN", 5, "mark"),
        ("there", "EX", 5, "expl"), ("is", "VBZ", 2, "ccomp"), ("no", "DT", 7, "det"),
        ("need", "NN", 5, "nsubj"), ("to", "TO", 9, "aux"), ("add", "VB", 7, "infmod"),
        ("punctuation", "NN", 9, "dobj"), ("in", "IN", 9, "prep"), ("transcribing", "VBG", 11, "pcomp"),
        ("spoken", "VBN", 14, "amod"), ("corpora", "NNS", 12, "dobj"), ("simply", "RB", 9, "advmod"),
        ("in", "IN", 9, "prep"), ("order", "NN", 16, "pobj"), ("to", "TO", 19, "aux"),
        ("help", "VB", 17, "infmod"), ("parsers", "NNS", 19, "dobj"), (".", ".", 2, "punct"),
    ],
    "ud": [
        ("This", "DT", 2, "nsubj"), ("indicates", "VBZ", 0, "root"), ("that", "IN", 5, "mark"),
        ("there", "EX", 5, "expl"), ("is", "VBZ", 2, "ccomp"), ("no", "DT", 7, "neg"),
        ("need", "NN", 5, "nsubj"), ("to", "TO", 9, "mark"), ("add", "VB", 7, "acl"),
        ("punctuation", "NN", 9, "dobj"), ("in", "IN", 12, "mark"), ("transcribing", "VBG", 9, "advcl"),
        ("spoken", "VBN", 14, "amod"), ("corpora", "NNS", 12, "dobj"), ("simply", "RB", 9, "advmod"),
        ("in", "IN", 19, "mark"), ("order", "NN", 16, "mwe"), ("to", "TO", 19, "mark"),
        ("help", "VB", 9, "advcl"), ("parsers", "NNS", 19, "dobj"), (".", ".", 2, "punct"),
    ],
}

_DEFINITION_SENT = {
    "conll08": [
        ("In", "IN", 6, "adv"), ("the", "DT", 3, "nmod"), ("process", "NN", 1, "pmod"),
        ("we", "PRP", 6, "sbj"), ("also", "RB", 6, "adv"), ("provide", "VBP", 0, "root"),
        ("a", "DT", 9, "nmod"), ("formal", "JJ", 9, "nmod"), ("definition", "NN", 6, "obj"),
        ("of", "IN", 9, "nmod"), ("parsing", "NN", 10, "pmod"), ("motivated", "VBN", 9, "appo"),
        ("by", "IN", 12, "lgs"), ("an", "DT", 16, "nmod"), ("informal", "JJ", 16, "nmod"),
        ("notion", "NN", 13, "pmod"), ("due", "JJ", 16, "nmod"), ("to", "TO", 17, "amod"),
        ("Lang", "NNP", 18, "pmod"), (".", ".", 6, "p"),
    ],
    "stanford_basic": [
        ("In", "IN", 6, "prep"), ("the", "DT", 3, "det"), ("process", "NN", 1, "pobj"),
        ("we", "PRP", 6, "nsubj"), ("also", "RB", 6, "advmod"), ("provide", "VBP", 0, "root"),
        ("a", "DT", 9, "det"), ("formal", "JJ", 9, "amod"), ("definition", "NN", 6, "dobj"),
        ("of", "IN", 9, "prep"), ("parsing", "NN", 10, "pobj"), ("motivated", "VBN", 9, "vmod"),
        ("by", "IN", 12, "prep"), ("an", "DT", 16, "det"), ("informal", "JJ", 16, "amod"),
        ("notion", "NN", 13, "pobj"), ("due", "JJ", 16, "amod"), ("to", "TO", 17, "prep"),
        ("Lang", "NNP", 18, "pobj"), (".", ".", 6, "punct"),
    ],
    "ud": [
        ("In", "IN", 3, "case"), ("the", "DT", 3, "det"), ("process", "NN", 6, "nmod"),
        ("we", "PRP", 6, "nsubj"), ("also", "RB", 6, "advmod"), ("provide", "VBP", 0, "root"),
        ("a", "DT", 9, "det"), ("formal", "JJ", 9, "amod"), ("definition", "NN", 6, "dobj"),
        ("of", "IN", 11, "case"), ("parsing", "NN", 9, "nmod"), ("motivated", "VBN", 9, "acl"),
        ("by", "IN", 16, "case"), ("an", "DT", 16, "det"), ("informal", "JJ", 16, "amod"),
        ("notion", "NN", 12, "nmod"), ("due", "JJ", 16, "amod"), ("to", "TO", 19, "case"),
        ("Lang", "NNP", 17, "nmod"), (".", ".", 6, "punct"),
    ],
}

_METHODOLOGY_SENT = {
    "conll08": [
        ("This", "DT", 2, "nmod"), ("paper", "NN", 3, "sbj"), ("describes", "VBZ", 0, "root"),
        ("a", "DT", 7, "nmod"), ("practical", "JJ", 7, "nmod"), ('"black-box"', "JJ", 7, "nmod"),
        ("methodology", "NN", 3, "obj"), ("for", "IN", 7, "nmod"), ("automatic", "JJ", 10, "nmod"),
        ("evaluation", "NN", 8, "pmod"), ("of", "IN", 10, "nmod"), ("question-answering", "JJ", 14, "nmod"),
        ("NL", "NNP", 14, "nmod"), ("systems", "NNS", 11, "pmod"), ("in", "IN", 14, "loc"),
        ("spoken", "VBN", 17, "nmod"), ("dialogue", "NN", 15, "pmod"), (".", ".", 3, "p"),
    ],
    "stanford_basic": [
        ("This", "DT", 2, "det"), ("paper", "NN", 3, "nsubj"), ("describes", "VBZ", 0, "root"),
        ("a", "DT", 7, "det"), ("practical", "JJ", 7, "amod"), ('"black-box"', "JJ", 7, "amod"),
        ("methodology", "NN", 3, "dobj"), ("for", "IN", 7, "prep"), ("automatic", "JJ", 10, "amod"),
        ("evaluation", "NN", 8, "pobj"), ("of", "IN", 10, "prep"), ("question-answering", "JJ", 14, "amod"),
        ("NL", "NNP", 14, "nn"), ("systems", "NNS", 11, "pobj"), ("in", "IN", 14, "prep"),
        ("spoken", "VBN", 17, "amod"), ("dialogue", "NN", 15, "pobj"), (".", ".", 3, "punct"),
    ],
    "ud": [
        ("This", "DT", 2, "det"), ("paper", "NN", 3, "nsubj"), ("describes", "VBZ", 0, "root"),
        ("a", "DT", 7, "det"), ("practical", "JJ", 7, "amod"), ('"black-box"', "JJ", 7, "amod"),
        ("methodology", "NN", 3, "dobj"), ("for", "IN", 10, "case"), ("automatic", "JJ", 10, "amod"),
        ("evaluation", "NN", 7, "nmod"), ("of", "IN", 14, "case"), ("question-answering", "JJ", 14, "amod"),
        ("NL", "NNP", 14, "compound"), ("systems", "NNS", 10, "nmod"), ("in", "IN", 17, "case"),
        ("spoken", "VBN", 17, "amod"), ("dialogue", "NN", 14, "nmod"), (".", ".", 3, "punct"),
    ],
}

# sentence id -> (rows per scheme, spans, relation)
_SENTENCES = {
    "S1": (
        _KNOWLEDGE_SOURCES,
        [EntitySpan("P05_1057_3", 2, 3, "knowledge sources"),
         EntitySpan("P05_1057_4", 7, 8, "feature functions")],
        RelationInstance("P05_1057_3", "P05_1057_4", "USAGE", False, "S1"),
    ),
    "S2": (
        _PUNCT_SENT,
        [EntitySpan("E2_1", 10, 10, "punctuation"), EntitySpan("E2_2", 13, 14, "spoken corpora")],
        RelationInstance("E2_1", "E2_2", "PART_WHOLE", False, "S2"),
    ),
    "S3": (
        _DEFINITION_SENT,
        [EntitySpan("E3_1", 8, 9, "formal definition"), EntitySpan("E3_2", 11, 11, "parsing")],
        RelationInstance("E3_1", "E3_2", "MODEL-FEATURE", False, "S3"),
    ),
    "S4": (
        _METHODOLOGY_SENT,
        [EntitySpan("E4_1", 6, 7, '"black-box" methodology'),
         EntitySpan("E4_2", 12, 14, "question-answering NL systems")],
        RelationInstance("E4_1", "E4_2", "USAGE", False, "S4"),
    ),
}

EXPECTED_PATHS = {
    "conll08": {
        "S1": "knowledge_sources <- SBJ <- are -> VC -> treated -> ADV -> as -> PMOD -> feature_functions",
        "S2": "punctuation <- obj <- add -> adv -> in -> pmod -> transcribing -> obj -> spoken_corpora",
        "S3": "formal_definition -> nmod -> of -> pmod -> parsing",
        "S4": '"black-box"_methodology -> nmod -> for -> pmod -> evaluation -> nmod -> of -> pmod '
              "-> question-answering_NL_systems",
    },
    "stanford_basic": {
        "S1": "knowledge_sources <- nsubjpass <- treated -> prep -> as -> pobj -> feature_functions",
        "S2": "punctuation <- dobj <- add -> prep -> in -> pcomp -> transcribing -> dobj -> spoken_corpora",
        "S3": "formal_definition -> prep -> of -> pobj -> parsing",
        "S4": '"black-box"_methodology -> prep -> for -> pobj -> evaluation -> prep -> of -> pobj '
              "-> question-answering_NL_systems",
    },
    "ud": {
        "S1": "knowledge_sources <- nsubjpass <- treated -> nmod -> feature_functions",
        "S2": "punctuation <- dobj <- add -> advcl -> transcribing -> dobj -> spoken_corpora",
        "S3": "formal_definition -> nmod -> parsing",
        "S4": '"black-box"_methodology -> nmod -> evaluation -> nmod -> question-answering_NL_systems',
    },
}


def conll_text(scheme: str, sentence_ids=None) -> str:
    """CoNLL-U text for the fixture sentences under ``scheme``."""
    ids = sentence_ids or list(_SENTENCES)
    out = []
    for sid in ids:
        out.append(f"# sent_id = {sid}\n")
        rows = _SENTENCES[sid][0][scheme]
        for i, (form, pos, head, rel) in enumerate(rows, start=1):
            out.append(f"{i}\t{form}\t_\t{pos}\t{pos}\t_\t{head}\t{rel}\t_\t_\n")
        out.append("\n")
    return "".join(out)


def spans_text(sentence_ids=None) -> str:
    ids = sentence_ids or list(_SENTENCES)
    return "".join(
        f"{sid}\t{s.code}\t{s.start}\t{s.end}\t{s.surface}\n" for sid in ids for s in _SENTENCES[sid][1]
    )


def relations_text(sentence_ids=None) -> str:
    ids = sentence_ids or list(_SENTENCES)
    out = []
    for sid in ids:
        r = _SENTENCES[sid][2]
        out.append(f"{r.label}\t{r.first_entity}\t{r.second_entity}\t\t{r.sentence_ref}\n")
    return "".join(out)
