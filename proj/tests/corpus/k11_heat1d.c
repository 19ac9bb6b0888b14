#pragma kernel heat1d params(T=3, N=7)
long A[N];

for (int t = 0; t < T; t++)
  for (int i = 1; i < N - 1; i++)
    // comp_ID: comp00
    A[i] = A[i - 1] + A[i] * 2 + A[i + 1];
