"""Pure-numpy Gibbs sweep kernels.

Same signatures and draw consumption as the compiled kernels; loops over
tokens (or documents) stay in Python, work across topics is vectorized.
"""

import numpy as np
from scipy.special import gammaln


def _pick(weights, u):
    cum = np.cumsum(weights)
    total = cum[-1]
    T = weights.shape[0]
    if not total > 0.0:
        return min(int(u * T), T - 1)
    return min(int(np.searchsorted(cum, u * total, side="right")), T - 1)


def _softmax_pick(logw, u):
    return _pick(np.exp(logw - logw.max()), u)


def lda_sweep(doc_ptr, words, z, s, n_tw, n_t, n_dt, k_tw, k_t, k_dt,
              cate, alpha, beta, lam, latent, u_topic, u_ind):
    T, V = n_tw.shape
    vbeta = V * beta
    for d in range(doc_ptr.shape[0] - 1):
        for i in range(doc_ptr[d], doc_ptr[d + 1]):
            w = words[i]
            t = z[i]
            if s[i] == 1:
                k_tw[t, w] -= 1
                k_t[t] -= 1
                k_dt[d, t] -= 1
            else:
                n_tw[t, w] -= 1
                n_t[t] -= 1
                n_dt[d, t] -= 1

            dirichlet = (n_tw[:, w] + beta) / (n_t + vbeta)
            if latent:
                word_term = (1.0 - lam) * dirichlet + lam * cate[:, w]
            else:
                word_term = dirichlet
            t = _pick((n_dt[d] + k_dt[d] + alpha) * word_term, u_topic[i])
            z[i] = t

            new_s = 0
            if latent:
                p1 = lam * cate[t, w]
                norm = (1.0 - lam) * dirichlet[t] + p1
                if norm > 0.0:
                    new_s = int(u_ind[i] * norm < p1)
                else:
                    new_s = int(u_ind[i] < lam)
            s[i] = new_s
            if new_s == 1:
                k_tw[t, w] += 1
                k_t[t] += 1
                k_dt[d, t] += 1
            else:
                n_tw[t, w] += 1
                n_t[t] += 1
                n_dt[d, t] += 1


def dmm_sweep(doc_ptr, words, uniq_ptr, uniq_words, uniq_counts, z, n_tw,
              n_t, n_dt, m_t, alpha, beta, u_topic):
    T, V = n_tw.shape
    vbeta = V * beta
    for d in range(doc_ptr.shape[0] - 1):
        nd = doc_ptr[d + 1] - doc_ptr[d]
        uw = uniq_words[uniq_ptr[d]:uniq_ptr[d + 1]]
        uc = uniq_counts[uniq_ptr[d]:uniq_ptr[d + 1]]
        t = z[d]
        m_t[t] -= 1
        n_t[t] -= nd
        n_dt[d, t] -= nd
        n_tw[t, uw] -= uc

        base = n_tw[:, uw] + beta
        logw = (np.log(m_t + alpha) + gammaln(n_t + vbeta)
                - gammaln(n_t + nd + vbeta)
                + (gammaln(base + uc) - gammaln(base)).sum(axis=1))
        t = _softmax_pick(logw, u_topic[d])

        z[d] = t
        m_t[t] += 1
        n_t[t] += nd
        n_dt[d, t] += nd
        n_tw[t, uw] += uc


def _log_mix(lam, dirichlet, cate_p):
    if lam == 0.0:
        return np.log(dirichlet)
    with np.errstate(divide="ignore"):
        if lam == 1.0:
            return np.log(cate_p)
        return np.log((1.0 - lam) * dirichlet + lam * cate_p)


def lfdmm_sweep(doc_ptr, words, z, s, n_tw, n_t, n_dt, k_tw, k_t, k_dt, m_t,
                cate, alpha, beta, lam, u_topic, u_ind):
    T, V = n_tw.shape
    vbeta = V * beta
    for d in range(doc_ptr.shape[0] - 1):
        lo, hi = doc_ptr[d], doc_ptr[d + 1]
        ws = words[lo:hi]
        sd = s[lo:hi]
        t = z[d]
        m_t[t] -= 1
        on = sd == 1
        np.subtract.at(k_tw[t], ws[on], 1)
        np.subtract.at(n_tw[t], ws[~on], 1)
        k_t[t] -= on.sum()
        n_t[t] -= (~on).sum()
        k_dt[d, t] -= on.sum()
        n_dt[d, t] -= (~on).sum()

        dirichlet = (n_tw[:, ws] + beta) / (n_t + vbeta)[:, None]
        logw = np.log(m_t + alpha) + _log_mix(lam, dirichlet, cate[:, ws]).sum(axis=1)
        if np.isfinite(logw).any():
            t = _softmax_pick(logw, u_topic[d])
        else:
            t = min(int(u_topic[d] * T), T - 1)
        z[d] = t

        p1 = lam * cate[t, ws]
        norm = (1.0 - lam) * dirichlet[t] + p1
        drawn = np.where(norm > 0.0, u_ind[lo:hi] * norm < p1, u_ind[lo:hi] < lam)
        sd[:] = drawn
        m_t[t] += 1
        on = sd == 1
        np.add.at(k_tw[t], ws[on], 1)
        np.add.at(n_tw[t], ws[~on], 1)
        k_t[t] += on.sum()
        n_t[t] += (~on).sum()
        k_dt[d, t] += on.sum()
        n_dt[d, t] += (~on).sum()
