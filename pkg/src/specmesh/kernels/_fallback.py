"""Pure scipy implementation of the recurrence kernel."""


def recurrence_basis(matrix, X, ak, bk, ck, out):
    K = out.shape[0]
    for k in range(K - 1):
        nxt = ak[k] * (matrix @ out[k])
        if bk[k] != 0.0:
            nxt += bk[k] * out[k]
        if k >= 1:
            nxt += ck[k] * out[k - 1]
        out[k + 1] = nxt
