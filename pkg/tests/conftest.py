import hypothesis.strategies as st
from hypothesis import settings

from bangcalc.syntax import Abs, App, Bang, Der, Sub, Var

settings.register_profile("suite", max_examples=60, deadline=None)
settings.load_profile("suite")

_names = st.sampled_from(["x", "y", "z", "u", "v"])


def bang_terms(max_leaves: int = 6):
    return st.recursive(
        st.builds(Var, _names),
        lambda sub: st.one_of(
            st.builds(App, sub, sub),
            st.builds(Abs, _names, sub),
            st.builds(Bang, sub),
            st.builds(Der, sub),
            st.builds(Sub, sub, _names, sub),
        ),
        max_leaves=max_leaves,
    )


def lambda_terms(max_leaves: int = 6):
    return st.recursive(
        st.builds(Var, _names),
        lambda sub: st.one_of(
            st.builds(App, sub, sub),
            st.builds(Abs, _names, sub),
            st.builds(Sub, sub, _names, sub),
        ),
        max_leaves=max_leaves,
    )


def lambda_values():
    return st.one_of(st.builds(Var, _names), st.builds(Abs, _names, lambda_terms(4)))
