"""Independent straight-line reimplementations used as test oracles.

Everything here deliberately avoids the library's data structures: masses
are dicts keyed by frozensets, the training loop is a direct transliteration
of the per-turn procedure, and the cue effect table is restated from
scratch.  Keep this file dumb; its value is that it shares no code with the
implementation under test.
"""

from __future__ import annotations

SPK = frozenset({"speaker"})
HEA = frozenset({"hearer"})
THETA = frozenset({"speaker", "hearer"})


class OracleConflict(Exception):
    pass


def bf_mass(speaker: float, hearer: float, theta: float) -> dict[frozenset, float]:
    return {SPK: speaker, HEA: hearer, THETA: theta}


def bf_combine(m1: dict[frozenset, float], m2: dict[frozenset, float]) -> dict[frozenset, float]:
    """Brute-force Dempster combination: enumerate all focal-element pairs,
    accumulate intersection masses, renormalize by 1 - conflict."""
    acc = {SPK: 0.0, HEA: 0.0, THETA: 0.0}
    conflict = 0.0
    for a in (SPK, HEA, THETA):
        for b in (SPK, HEA, THETA):
            product = m1[a] * m2[b]
            inter = a & b
            if inter:
                acc[inter] += product
            else:
                conflict += product
    norm = 1.0 - conflict
    if norm <= 0.0:
        raise OracleConflict("total conflict")
    return {k: v / norm for k, v in acc.items()}


def bf_combine_all(masses: list[dict[frozenset, float]]) -> dict[frozenset, float]:
    result = masses[0]
    for m in masses[1:]:
        result = bf_combine(result, m)
    return result


# Effect scope per cue token, restated: "both" moves task and dialogue
# initiative, "di" the dialogue initiative only.
CUE_EFFECTS = {
    "explicit_giveup": "both",
    "explicit_takeover": "both",
    "end_silence": "both",
    "no_new_info:repetition": "both",
    "no_new_info:prompt": "both",
    "question:domain": "di",
    "question:evaluation": "di",
    "obligation_fulfilled:task": "both",
    "obligation_fulfilled:discourse": "di",
    "invalidity:action": "both",
    "invalidity:belief": "di",
    "suboptimality": "both",
    "ambiguity:action": "both",
    "ambiguity:belief": "di",
}

ALL_CUES = list(CUE_EFFECTS)


def _fresh_model() -> dict[tuple[str, str], dict]:
    model = {}
    for token, effect in CUE_EFFECTS.items():
        dims = ("task", "dialogue") if effect == "both" else ("dialogue",)
        for dim in dims:
            model[(token, dim)] = {"m": bf_mass(0.0, 0.0, 1.0), "counter": 0}
    return model


def _increment(m: dict[frozenset, float], actual: str, amount: float) -> dict[frozenset, float]:
    inc = min(amount, m[THETA])
    out = dict(m)
    out[SPK if actual == "speaker" else HEA] = m[SPK if actual == "speaker" else HEA] + inc
    out[THETA] = m[THETA] - inc
    return out


def _adjust(entry: dict, actual: str, method: str, delta: float) -> None:
    if method == "const":
        entry["m"] = _increment(entry["m"], actual, delta)
        return
    entry["counter"] -= 1
    if method == "const-counter":
        if entry["counter"] < 0:
            entry["m"] = _increment(entry["m"], actual, delta)
            entry["counter"] = 0
        return
    if method == "var-counter":
        count = entry["counter"]
        if count < 0:
            count = 0
        entry["m"] = _increment(entry["m"], actual, delta / 2 ** (count + 1))
        return
    raise AssertionError(method)


def figure1_train(
    dialogues: list[dict],
    *,
    delta: float,
    method: str,
    default_x: float = 0.5,
    reset_strength: float = 0.75,
):
    """Straight-line training loop over plain-dict dialogues.

    `dialogues` entries look like:
        {"id": "d1", "turns": [{"speaker": "a", "hearer": "b",
                                "ti": "a", "di": "a", "cues": [...]}, ...]}

    Returns (model, trace) or raises OracleConflict.  Trace rows are
    (dialogue id, turn index, predicted ti role, predicted di role,
    ti correct, di correct).
    """
    model = _fresh_model()
    trace = []
    for dialogue in dialogues:
        m_t_cur = bf_mass(default_x, 1.0 - default_x, 0.0)
        m_d_cur = bf_mass(default_x, 1.0 - default_x, 0.0)
        turns = dialogue["turns"]
        for t in range(len(turns) - 1):
            turn, nxt = turns[t], turns[t + 1]
            cues = turn["cues"]

            task_obs = [model[(c, "task")]["m"] for c in cues if CUE_EFFECTS[c] == "both"]
            dlg_obs = [model[(c, "dialogue")]["m"] for c in cues]
            m_t_new = bf_combine_all([m_t_cur] + task_obs)
            m_d_new = bf_combine_all([m_d_cur] + dlg_obs)

            t_predicted = "speaker" if m_t_new[SPK] >= m_t_new[HEA] else "hearer"
            d_predicted = "speaker" if m_d_new[SPK] >= m_d_new[HEA] else "hearer"

            t_actual = "speaker" if nxt["ti"] == turn["speaker"] else "hearer"
            d_actual = "speaker" if nxt["di"] == turn["speaker"] else "hearer"

            ti_ok = t_predicted == t_actual
            di_ok = d_predicted == d_actual

            if not ti_ok:
                for c in cues:
                    if CUE_EFFECTS[c] == "both":
                        _adjust(model[(c, "task")], t_actual, method, delta)
                if t_actual == "speaker":
                    m_t_new = bf_mass(reset_strength, 1.0 - reset_strength, 0.0)
                else:
                    m_t_new = bf_mass(1.0 - reset_strength, reset_strength, 0.0)
            elif method != "const":
                for c in cues:
                    if CUE_EFFECTS[c] == "both":
                        model[(c, "task")]["counter"] += 1

            if not di_ok:
                for c in cues:
                    _adjust(model[(c, "dialogue")], d_actual, method, delta)
                if d_actual == "speaker":
                    m_d_new = bf_mass(reset_strength, 1.0 - reset_strength, 0.0)
                else:
                    m_d_new = bf_mass(1.0 - reset_strength, reset_strength, 0.0)
            elif method != "const":
                for c in cues:
                    model[(c, "dialogue")]["counter"] += 1

            trace.append((dialogue["id"], t, t_predicted, d_predicted, ti_ok, di_ok))

            # swap roles of speaker and hearer for the next turn
            m_t_cur = bf_mass(m_t_new[HEA], m_t_new[SPK], m_t_new[THETA])
            m_d_cur = bf_mass(m_d_new[HEA], m_d_new[SPK], m_d_new[THETA])
    return model, trace
