#pragma kernel scale params(N=8)
double X[N];
double Y[N];

for (int i = 0; i < N; i++)
  // comp_ID: comp00
  Y[i] = X[i] * 3 + Y[i];
